#pragma once

#include "hac/audio/fft.hpp"

namespace hac {

// Plain row-major matrix for non-differentiable feature work.
struct Mat {
    long rows = 0;
    long cols = 0;
    std::vector<real> v;

    Mat() = default;
    Mat(long r, long c) : rows(r), cols(c), v((size_t)(r * c), 0.0) {}
    real& at(long r, long c) { return v[(size_t)(r * cols + c)]; }
    real at(long r, long c) const { return v[(size_t)(r * cols + c)]; }
    real* row(long r) { return v.data() + r * cols; }
    const real* row(long r) const { return v.data() + r * cols; }
};

struct StftSpec {
    long win = 512;   // power of two; also the FFT size
    long hop = 128;   // win/4 unless stated otherwise
    long bins() const { return win / 2 + 1; }
    long frames(long t) const { return t >= win ? 1 + (t - win) / hop : 0; }
};

// Magnitude spectrogram, frames x bins, Hann window, no centering.
inline Mat stft_magnitude(const std::vector<real>& x, const StftSpec& spec) {
    check(is_pow2(spec.win), "stft: window must be a power of two");
    check((long)x.size() >= spec.win,
          "stft: signal of " + std::to_string(x.size()) + " samples shorter than window " +
              std::to_string(spec.win));
    const long fr = spec.frames((long)x.size());
    const long b = spec.bins();
    const std::vector<real> w = hann_window(spec.win);
    Mat out(fr, b);
    std::vector<cplx> buf((size_t)spec.win);
    for (long f = 0; f < fr; ++f) {
        const long off = f * spec.hop;
        for (long i = 0; i < spec.win; ++i)
            buf[(size_t)i] = cplx(x[(size_t)(off + i)] * w[(size_t)i], 0.0);
        fft_inplace(buf);
        for (long k = 0; k < b; ++k) out.at(f, k) = std::abs(buf[(size_t)k]);
    }
    return out;
}

// Triangular mel filterbank, n_mels x bins. Mel scale 2595*log10(1 + f/700),
// filters linearly spaced in mel between 0 and sr/2, unnormalized peaks of 1.
inline Mat mel_filterbank(long n_mels, long win, long sample_rate) {
    const long bins = win / 2 + 1;
    check(n_mels >= 1 && n_mels <= bins, "mel_filterbank: need 1 <= n_mels <= bins");
    auto hz_to_mel = [](real f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto mel_to_hz = [](real m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const real mel_max = hz_to_mel((real)sample_rate / 2.0);
    std::vector<real> centers((size_t)(n_mels + 2));
    for (long i = 0; i < n_mels + 2; ++i)
        centers[(size_t)i] = mel_to_hz(mel_max * (real)i / (real)(n_mels + 1));
    Mat fb(n_mels, bins);
    for (long m = 0; m < n_mels; ++m) {
        const real lo = centers[(size_t)m], mid = centers[(size_t)(m + 1)], hi = centers[(size_t)(m + 2)];
        for (long k = 0; k < bins; ++k) {
            const real f = (real)k * (real)sample_rate / (real)win;
            real val = 0.0;
            if (f > lo && f < mid) val = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi) val = (hi - f) / (hi - mid);
            fb.at(m, k) = val;
        }
    }
    return fb;
}

// log10 mel spectrogram with magnitude floor, frames x n_mels.
inline Mat log_mel_spectrogram(const std::vector<real>& x, const StftSpec& spec, long n_mels,
                               long sample_rate, real floor_val = 1e-5) {
    const Mat mag = stft_magnitude(x, spec);
    const Mat fb = mel_filterbank(n_mels, spec.win, sample_rate);
    Mat out(mag.rows, n_mels);
    for (long f = 0; f < mag.rows; ++f) {
        for (long m = 0; m < n_mels; ++m) {
            real acc = 0.0;
            for (long k = 0; k < mag.cols; ++k) acc += fb.at(m, k) * mag.at(f, k);
            out.at(f, m) = std::log10(std::max(acc, floor_val));
        }
    }
    return out;
}

// Frame-rate-locked log-mel features: reflect-pads so that exactly
// floor(T/hop) frames come out, one per codec frame.
inline Mat log_mel_frames(const std::vector<real>& x, long hop, long win, long n_mels,
                          long sample_rate, real floor_val = 1e-5) {
    check(is_pow2(win) && win >= hop, "log_mel_frames: window must be a power of two >= hop");
    const long t = (long)x.size();
    const long f = t / hop;
    check(f >= 1, "log_mel_frames: fewer samples than one hop");
    const long lpad = (win - hop) / 2;
    const long rpad = win - hop - lpad + hop;  // slack so the last frame fits
    std::vector<real> padded;
    padded.reserve((size_t)(t + lpad + rpad));
    for (long i = lpad; i >= 1; --i) padded.push_back(x[(size_t)std::min<long>(i, t - 1)]);
    padded.insert(padded.end(), x.begin(), x.end());
    for (long i = 0; i < rpad; ++i)
        padded.push_back(x[(size_t)std::max<long>(0, t - 2 - i >= 0 ? t - 2 - i : 0)]);
    StftSpec spec{win, hop};
    Mat full = log_mel_spectrogram(padded, spec, n_mels, sample_rate, floor_val);
    check(full.rows >= f, "log_mel_frames: internal frame arithmetic");
    Mat out(f, n_mels);
    std::copy(full.v.begin(), full.v.begin() + (size_t)(f * n_mels), out.v.begin());
    return out;
}

}  // namespace hac
