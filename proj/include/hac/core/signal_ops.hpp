#pragma once

#include "hac/audio/spectrogram.hpp"
#include "hac/core/ops.hpp"

namespace hac {

// Differentiable STFT of a 1-D signal: out[0] = Re, out[1] = Im over
// [frames x bins], Hann window, no centering. Linear in x, so the backward
// pass is the exact adjoint (mirror-free since only bins 0..N/2 are emitted).
inline Tensor stft_complex(const Tensor& x, const StftSpec& spec) {
    check(x.rank() == 1, "stft_complex: rank-1 signal required");
    check(is_pow2(spec.win), "stft_complex: window must be a power of two");
    const long t = x.dim(0);
    check(t >= spec.win, "stft_complex: signal shorter than window");
    const long fr = spec.frames(t);
    const long b = spec.bins();
    auto window = std::make_shared<std::vector<real>>(hann_window(spec.win));
    auto out = make_op_node({2, fr, b}, {x.node()});
    {
        const real* px = x.data();
        std::vector<cplx> buf((size_t)spec.win);
        for (long f = 0; f < fr; ++f) {
            const long off = f * spec.hop;
            for (long i = 0; i < spec.win; ++i)
                buf[(size_t)i] = cplx(px[off + i] * (*window)[(size_t)i], 0.0);
            fft_inplace(buf);
            for (long k = 0; k < b; ++k) {
                out->value[(size_t)(f * b + k)] = buf[(size_t)k].real();
                out->value[(size_t)(fr * b + f * b + k)] = buf[(size_t)k].imag();
            }
        }
    }
    if (out->requires_grad) {
        Node* o = out.get();
        Node* xn = x.node().get();
        const long win = spec.win, hop = spec.hop;
        out->backward = [o, xn, window, win, hop, fr, b] {
            xn->ensure_grad();
            std::vector<cplx> buf((size_t)win);
            for (long f = 0; f < fr; ++f) {
                for (long k = 0; k < win; ++k) {
                    if (k < b)
                        buf[(size_t)k] = cplx(o->grad[(size_t)(f * b + k)],
                                              o->grad[(size_t)(fr * b + f * b + k)]);
                    else
                        buf[(size_t)k] = cplx(0.0, 0.0);
                }
                fft_inplace(buf, /*inverse=*/true);
                const long off = f * hop;
                for (long i = 0; i < win; ++i)
                    xn->grad[(size_t)(off + i)] += buf[(size_t)i].real() * (*window)[(size_t)i];
            }
        };
    }
    return Tensor(out);
}

// [2, F, B] complex planes -> [F, B] magnitudes; zero gradient at exact zeros.
inline Tensor complex_magnitude(const Tensor& z) {
    check(z.rank() == 3 && z.dim(0) == 2, "complex_magnitude: [2,F,B] required");
    const long fr = z.dim(1), b = z.dim(2), n = fr * b;
    auto out = make_op_node({fr, b}, {z.node()});
    const real* pz = z.data();
    for (long i = 0; i < n; ++i)
        out->value[(size_t)i] = std::hypot(pz[i], pz[n + i]);
    if (out->requires_grad) {
        Node* o = out.get();
        Node* zn = z.node().get();
        out->backward = [o, zn, n] {
            zn->ensure_grad();
            for (long i = 0; i < n; ++i) {
                const real m = o->value[(size_t)i];
                if (m <= 1e-300) continue;
                const real g = o->grad[(size_t)i] / m;
                zn->grad[(size_t)i] += g * zn->value[(size_t)i];
                zn->grad[(size_t)(n + i)] += g * zn->value[(size_t)(n + i)];
            }
        };
    }
    return Tensor(out);
}

}  // namespace hac
