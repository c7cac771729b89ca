#pragma once

#include <cmath>
#include <cstring>
#include <fstream>

#include "hac/core/tensor.hpp"

namespace hac {

struct Waveform {
    std::vector<real> samples;  // mono, in [-1, 1]
    long sample_rate = 0;

    long size() const { return (long)samples.size(); }
    real seconds() const { return (real)samples.size() / (real)sample_rate; }
};

inline void validate_waveform(const Waveform& w) {
    check(w.sample_rate > 0, "waveform: sample rate must be positive");
    check(!w.samples.empty(), "waveform: empty signal");
    for (real s : w.samples) check(std::isfinite(s), "waveform: non-finite sample");
}

namespace wav_detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
    return (std::uint32_t)p[0] | ((std::uint32_t)p[1] << 8) | ((std::uint32_t)p[2] << 16) |
           ((std::uint32_t)p[3] << 24);
}
inline std::uint16_t rd_u16(const unsigned char* p) {
    return (std::uint16_t)(p[0] | (p[1] << 8));
}

}  // namespace wav_detail

// Reads a mono PCM WAV file (16-bit integer or 32-bit IEEE float).
// Multi-channel input is rejected. Values are mapped into [-1, 1].
inline Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "missing audio file: " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    check(raw.size() >= 44, "corrupt wav header (file too small): " + path);
    check(std::memcmp(raw.data(), "RIFF", 4) == 0 && std::memcmp(raw.data() + 8, "WAVE", 4) == 0,
          "corrupt wav header (not RIFF/WAVE): " + path);

    using namespace wav_detail;
    size_t pos = 12;
    int fmt_code = -1, channels = 0, bits = 0;
    long rate = 0;
    const unsigned char* data = nullptr;
    size_t data_len = 0;
    while (pos + 8 <= raw.size()) {
        const std::uint32_t chunk_len = rd_u32(raw.data() + pos + 4);
        const unsigned char* body = raw.data() + pos + 8;
        if (pos + 8 + chunk_len > raw.size()) {
            check(false, "corrupt wav header (chunk overruns file): " + path);
        }
        if (std::memcmp(raw.data() + pos, "fmt ", 4) == 0) {
            check(chunk_len >= 16, "corrupt wav header (short fmt chunk): " + path);
            fmt_code = rd_u16(body);
            channels = rd_u16(body + 2);
            rate = (long)rd_u32(body + 4);
            bits = rd_u16(body + 14);
        } else if (std::memcmp(raw.data() + pos, "data", 4) == 0) {
            data = body;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }
    check(fmt_code != -1 && data != nullptr, "corrupt wav header (missing fmt/data): " + path);
    check(channels == 1, "multi-channel wav rejected (" + std::to_string(channels) +
                             " channels): " + path);
    check(rate > 0, "corrupt wav header (zero sample rate): " + path);

    Waveform w;
    w.sample_rate = rate;
    if (fmt_code == 1 && bits == 16) {
        const size_t n = data_len / 2;
        w.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const std::int16_t s = (std::int16_t)rd_u16(data + 2 * i);
            w.samples[i] = (real)s / 32768.0;
        }
    } else if (fmt_code == 3 && bits == 32) {
        const size_t n = data_len / 4;
        w.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            std::uint32_t u = rd_u32(data + 4 * i);
            float f;
            std::memcpy(&f, &u, 4);
            check(std::isfinite(f), "wav contains non-finite sample: " + path);
            w.samples[i] = std::clamp((real)f, -1.0, 1.0);
        }
    } else {
        check(false, "unsupported wav encoding (need 16-bit PCM or 32-bit float): " + path);
    }
    check(!w.samples.empty(), "wav has no samples: " + path);
    return w;
}

inline void write_wav(const std::string& path, const Waveform& w) {
    validate_waveform(w);
    std::ofstream out(path, std::ios::binary);
    check(out.good(), "cannot open for writing: " + path);
    const std::uint32_t n = (std::uint32_t)w.samples.size();
    const std::uint32_t data_len = n * 2;
    auto wr_u32 = [&out](std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xff);
        out.write((const char*)b, 4);
    };
    auto wr_u16 = [&out](std::uint16_t v) {
        unsigned char b[2] = {(unsigned char)(v & 0xff), (unsigned char)(v >> 8)};
        out.write((const char*)b, 2);
    };
    out.write("RIFF", 4);
    wr_u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    wr_u32(16);
    wr_u16(1);  // PCM
    wr_u16(1);  // mono
    wr_u32((std::uint32_t)w.sample_rate);
    wr_u32((std::uint32_t)(w.sample_rate * 2));
    wr_u16(2);
    wr_u16(16);
    out.write("data", 4);
    wr_u32(data_len);
    for (real s : w.samples) {
        const real c = std::clamp(s, -1.0, 1.0);
        const long q = std::lround(c * 32767.0);
        wr_u16((std::uint16_t)(std::int16_t)q);
    }
    out.close();
    check(out.good(), "write failed: " + path);
}

// Windowed-sinc rational resampler (Hann window, 32 taps per side).
inline Waveform resample(const Waveform& w, long target_rate) {
    check(target_rate > 0, "resample: target rate must be positive");
    if (w.sample_rate == target_rate) return w;
    const long t_in = w.size();
    const long t_out = (long)((double)t_in * (double)target_rate / (double)w.sample_rate);
    check(t_out >= 1, "resample: output would be empty");
    const real ratio = (real)w.sample_rate / (real)target_rate;
    const real cutoff = std::min(1.0, 1.0 / ratio);  // anti-alias when downsampling
    const int taps = 32;
    Waveform out;
    out.sample_rate = target_rate;
    out.samples.resize((size_t)t_out);
    for (long i = 0; i < t_out; ++i) {
        const real center = (real)i * ratio;
        const long lo = (long)std::floor(center) - taps + 1;
        const long hi = (long)std::floor(center) + taps;
        real acc = 0.0;
        for (long j = std::max<long>(0, lo); j <= std::min<long>(t_in - 1, hi); ++j) {
            const real d = ((real)j - center) * cutoff;
            const real sinc = d == 0.0 ? 1.0 : std::sin(3.14159265358979323846 * d) /
                                                   (3.14159265358979323846 * d);
            const real u = ((real)j - center) / (real)taps;
            const real win = std::abs(u) < 1.0
                                 ? 0.5 + 0.5 * std::cos(3.14159265358979323846 * u)
                                 : 0.0;
            acc += w.samples[(size_t)j] * sinc * win * cutoff;
        }
        out.samples[(size_t)i] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

// Loads a mono wav and optionally resamples to the configured rate.
inline Waveform load_waveform(const std::string& path, long target_rate = 0) {
    Waveform w = read_wav(path);
    validate_waveform(w);
    if (target_rate > 0 && w.sample_rate != target_rate) w = resample(w, target_rate);
    return w;
}

}  // namespace hac
