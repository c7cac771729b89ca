#pragma once

#include <complex>
#include <vector>

#include "hac/core/tensor.hpp"

namespace hac {

using cplx = std::complex<real>;

inline bool is_pow2(long n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. inverse=true applies e^{+i...} without the
// 1/N normalization.
inline void fft_inplace(std::vector<cplx>& a, bool inverse = false) {
    const size_t n = a.size();
    check(is_pow2((long)n), "fft: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const real ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 / (real)len;
        const cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline std::vector<real> hann_window(long n) {
    std::vector<real> w((size_t)n);
    for (long i = 0; i < n; ++i)
        w[(size_t)i] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * (real)i / (real)n);
    return w;
}

}  // namespace hac
