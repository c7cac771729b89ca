#pragma once

#include "hac/audio/spectrogram.hpp"
#include "hac/audio/wav.hpp"

namespace hac {

// Scale-invariant signal-to-distortion ratio in dB, clamped to +-cap.
// The reference projection s = (<x_hat, x>/<x, x>) x removes any scaling of
// the estimate, so si_sdr(a*x_hat, x) == si_sdr(x_hat, x) for a != 0.
inline real si_sdr(const Waveform& reference, const Waveform& estimate, real cap_db = 100.0) {
    check(reference.size() == estimate.size(),
          "si_sdr: length mismatch " + std::to_string(reference.size()) + " vs " +
              std::to_string(estimate.size()));
    real xx = 0.0, xy = 0.0;
    for (long i = 0; i < reference.size(); ++i) {
        xx += reference.samples[(size_t)i] * reference.samples[(size_t)i];
        xy += estimate.samples[(size_t)i] * reference.samples[(size_t)i];
    }
    check(xx > 0.0, "si_sdr: zero reference signal");
    const real alpha = xy / xx;
    real s2 = 0.0, e2 = 0.0;
    for (long i = 0; i < reference.size(); ++i) {
        const real s = alpha * reference.samples[(size_t)i];
        const real e = estimate.samples[(size_t)i] - s;
        s2 += s * s;
        e2 += e * e;
    }
    if (e2 <= 0.0) return cap_db;   // estimate is an exact scaling of the reference
    if (s2 <= 0.0) return -cap_db;  // estimate orthogonal to the reference
    return std::clamp(10.0 * std::log10(s2 / e2), -cap_db, cap_db);
}

// Fixed spectral scales for the reported distances; windows are powers of two
// with hop = window/4, log10 magnitudes floored at 1e-5.
struct EvalSpectralConfig {
    std::vector<long> mel_windows = {2048, 512, 128};
    std::vector<long> mel_bins = {80, 40, 10};
    std::vector<long> stft_windows = {2048, 512};
    real floor_val = 1e-5;
};

// Multi-scale L1 between log mel spectrograms.
inline real mel_distance(const Waveform& a, const Waveform& b,
                         const EvalSpectralConfig& cfg = {}) {
    check(a.size() == b.size(), "mel_distance: length mismatch");
    check(a.sample_rate == b.sample_rate, "mel_distance: sample rate mismatch");
    real total = 0.0;
    for (size_t s = 0; s < cfg.mel_windows.size(); ++s) {
        StftSpec spec{cfg.mel_windows[s], cfg.mel_windows[s] / 4};
        Mat ma = log_mel_spectrogram(a.samples, spec, cfg.mel_bins[s], a.sample_rate,
                                     cfg.floor_val);
        Mat mb = log_mel_spectrogram(b.samples, spec, cfg.mel_bins[s], b.sample_rate,
                                     cfg.floor_val);
        real acc = 0.0;
        for (size_t i = 0; i < ma.v.size(); ++i) acc += std::abs(ma.v[i] - mb.v[i]);
        total += acc / (real)ma.v.size();
    }
    return total / (real)cfg.mel_windows.size();
}

// Multi-scale L1 between log magnitude spectrograms.
inline real stft_distance(const Waveform& a, const Waveform& b,
                          const EvalSpectralConfig& cfg = {}) {
    check(a.size() == b.size(), "stft_distance: length mismatch");
    check(a.sample_rate == b.sample_rate, "stft_distance: sample rate mismatch");
    real total = 0.0;
    for (long win : cfg.stft_windows) {
        StftSpec spec{win, win / 4};
        Mat ma = stft_magnitude(a.samples, spec);
        Mat mb = stft_magnitude(b.samples, spec);
        real acc = 0.0;
        for (size_t i = 0; i < ma.v.size(); ++i)
            acc += std::abs(std::log10(std::max(ma.v[i], cfg.floor_val)) -
                            std::log10(std::max(mb.v[i], cfg.floor_val)));
        total += acc / (real)ma.v.size();
    }
    return total / (real)cfg.stft_windows.size();
}

}  // namespace hac
