#pragma once

#include "hac/core/ops.hpp"

namespace hac {

// 1-D convolution over channel-first tensors.
//   x: [C_in, T], w: [C_out, C_in/groups, K], bias: [C_out] (optional)
//   out: [C_out, 1 + (T + 2*pad - dil*(K-1) - 1) / stride]
inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
                     long stride = 1, long pad = 0, long dil = 1, long groups = 1) {
    check(x.rank() == 2 && w.rank() == 3, "conv1d: x must be [C,T], w must be [O,I,K]");
    const long cin = x.dim(0), t_in = x.dim(1);
    const long cout = w.dim(0), wci = w.dim(1), k = w.dim(2);
    check(cin % groups == 0 && cout % groups == 0 && wci == cin / groups,
          "conv1d: channel/group mismatch");
    const long span = dil * (k - 1) + 1;
    check(t_in + 2 * pad >= span, "conv1d: input shorter than kernel span");
    const long t_out = 1 + (t_in + 2 * pad - span) / stride;
    std::vector<std::shared_ptr<Node>> parents{x.node(), w.node()};
    if (bias.defined()) {
        check(bias.rank() == 1 && bias.dim(0) == cout, "conv1d: bias dim mismatch");
        parents.push_back(bias.node());
    }
    auto out = make_op_node({cout, t_out}, parents);

    const real* px = x.data();
    const real* pw = w.data();
    const real* pb = bias.defined() ? bias.data() : nullptr;
    const long gin = cin / groups, gout = cout / groups;

#pragma omp parallel for schedule(static)
    for (long oc = 0; oc < cout; ++oc) {
        const long g = oc / gout;
        real* po = out->value.data() + oc * t_out;
        for (long t = 0; t < t_out; ++t) {
            real acc = pb ? pb[oc] : 0.0;
            const long base = t * stride - pad;
            for (long ic = 0; ic < gin; ++ic) {
                const real* xr = px + (g * gin + ic) * t_in;
                const real* wr = pw + (oc * gin + ic) * k;
                for (long kk = 0; kk < k; ++kk) {
                    const long s = base + kk * dil;
                    if (s >= 0 && s < t_in) acc += wr[kk] * xr[s];
                }
            }
            po[t] = acc;
        }
    }

    if (out->requires_grad) {
        Node* o = out.get();
        Node* xn = x.node().get();
        Node* wn = w.node().get();
        Node* bn = bias.defined() ? bias.node().get() : nullptr;
        out->backward = [=] {
            const real* go = o->grad.data();
            if (xn->requires_grad) {
                xn->ensure_grad();
#pragma omp parallel for schedule(static)
                for (long ic = 0; ic < cin; ++ic) {
                    const long g = ic / gin;
                    real* gx = xn->grad.data() + ic * t_in;
                    for (long oc = g * gout; oc < (g + 1) * gout; ++oc) {
                        const real* wr = wn->value.data() + (oc * gin + (ic - g * gin)) * k;
                        const real* gr = go + oc * t_out;
                        for (long t = 0; t < t_out; ++t) {
                            const long base = t * stride - pad;
                            const real gv = gr[t];
                            for (long kk = 0; kk < k; ++kk) {
                                const long s = base + kk * dil;
                                if (s >= 0 && s < t_in) gx[s] += wr[kk] * gv;
                            }
                        }
                    }
                }
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
#pragma omp parallel for schedule(static)
                for (long oc = 0; oc < cout; ++oc) {
                    const long g = oc / gout;
                    const real* gr = go + oc * t_out;
                    for (long ic = 0; ic < gin; ++ic) {
                        const real* xr = xn->value.data() + (g * gin + ic) * t_in;
                        real* gw = wn->grad.data() + (oc * gin + ic) * k;
                        for (long kk = 0; kk < k; ++kk) {
                            real acc = 0.0;
                            for (long t = 0; t < t_out; ++t) {
                                const long s = t * stride - pad + kk * dil;
                                if (s >= 0 && s < t_in) acc += gr[t] * xr[s];
                            }
                            gw[kk] += acc;
                        }
                    }
                }
            }
            if (bn && bn->requires_grad) {
                bn->ensure_grad();
                for (long oc = 0; oc < cout; ++oc) {
                    real acc = 0.0;
                    for (long t = 0; t < t_out; ++t) acc += go[oc * t_out + t];
                    bn->grad[(size_t)oc] += acc;
                }
            }
        };
    }
    return Tensor(out);
}

// Transposed 1-D convolution.
//   x: [C_in, T], w: [C_in, C_out, K], out: [C_out, (T-1)*stride + K - 2*pad + out_pad]
inline Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& bias,
                               long stride = 1, long pad = 0, long out_pad = 0) {
    check(x.rank() == 2 && w.rank() == 3, "conv_transpose1d: x must be [C,T], w must be [I,O,K]");
    const long cin = x.dim(0), t_in = x.dim(1);
    check(w.dim(0) == cin, "conv_transpose1d: channel mismatch");
    const long cout = w.dim(1), k = w.dim(2);
    const long t_out = (t_in - 1) * stride + k - 2 * pad + out_pad;
    check(t_out >= 1, "conv_transpose1d: empty output");
    std::vector<std::shared_ptr<Node>> parents{x.node(), w.node()};
    if (bias.defined()) {
        check(bias.rank() == 1 && bias.dim(0) == cout, "conv_transpose1d: bias dim mismatch");
        parents.push_back(bias.node());
    }
    auto out = make_op_node({cout, t_out}, parents);

    const real* px = x.data();
    const real* pw = w.data();
    const real* pb = bias.defined() ? bias.data() : nullptr;

#pragma omp parallel for schedule(static)
    for (long oc = 0; oc < cout; ++oc) {
        real* po = out->value.data() + oc * t_out;
        if (pb)
            for (long u = 0; u < t_out; ++u) po[u] = pb[oc];
        for (long ic = 0; ic < cin; ++ic) {
            const real* xr = px + ic * t_in;
            const real* wr = pw + (ic * cout + oc) * k;
            for (long t = 0; t < t_in; ++t) {
                const long base = t * stride - pad;
                const real xv = xr[t];
                for (long kk = 0; kk < k; ++kk) {
                    const long u = base + kk;
                    if (u >= 0 && u < t_out) po[u] += wr[kk] * xv;
                }
            }
        }
    }

    if (out->requires_grad) {
        Node* o = out.get();
        Node* xn = x.node().get();
        Node* wn = w.node().get();
        Node* bn = bias.defined() ? bias.node().get() : nullptr;
        out->backward = [=] {
            const real* go = o->grad.data();
            if (xn->requires_grad) {
                xn->ensure_grad();
#pragma omp parallel for schedule(static)
                for (long ic = 0; ic < cin; ++ic) {
                    real* gx = xn->grad.data() + ic * t_in;
                    for (long oc = 0; oc < cout; ++oc) {
                        const real* wr = wn->value.data() + (ic * cout + oc) * k;
                        const real* gr = go + oc * t_out;
                        for (long t = 0; t < t_in; ++t) {
                            const long base = t * stride - pad;
                            real acc = 0.0;
                            for (long kk = 0; kk < k; ++kk) {
                                const long u = base + kk;
                                if (u >= 0 && u < t_out) acc += wr[kk] * gr[u];
                            }
                            gx[t] += acc;
                        }
                    }
                }
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
#pragma omp parallel for schedule(static)
                for (long ic = 0; ic < cin; ++ic) {
                    const real* xr = xn->value.data() + ic * t_in;
                    for (long oc = 0; oc < cout; ++oc) {
                        real* gw = wn->grad.data() + (ic * cout + oc) * k;
                        const real* gr = go + oc * t_out;
                        for (long kk = 0; kk < k; ++kk) {
                            real acc = 0.0;
                            for (long t = 0; t < t_in; ++t) {
                                const long u = t * stride - pad + kk;
                                if (u >= 0 && u < t_out) acc += xr[t] * gr[u];
                            }
                            gw[kk] += acc;
                        }
                    }
                }
            }
            if (bn && bn->requires_grad) {
                bn->ensure_grad();
                for (long oc = 0; oc < cout; ++oc) {
                    real acc = 0.0;
                    for (long u = 0; u < t_out; ++u) acc += go[oc * t_out + u];
                    bn->grad[(size_t)oc] += acc;
                }
            }
        };
    }
    return Tensor(out);
}

// 2-D convolution over [C, H, W] maps (discriminators only).
//   w: [C_out, C_in, KH, KW]
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
                     long stride_h = 1, long stride_w = 1, long pad_h = 0, long pad_w = 0) {
    check(x.rank() == 3 && w.rank() == 4, "conv2d: x must be [C,H,W], w must be [O,I,KH,KW]");
    const long cin = x.dim(0), h = x.dim(1), win = x.dim(2);
    const long cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    check(w.dim(1) == cin, "conv2d: channel mismatch");
    check(h + 2 * pad_h >= kh && win + 2 * pad_w >= kw, "conv2d: input smaller than kernel");
    const long ho = 1 + (h + 2 * pad_h - kh) / stride_h;
    const long wo = 1 + (win + 2 * pad_w - kw) / stride_w;
    std::vector<std::shared_ptr<Node>> parents{x.node(), w.node()};
    if (bias.defined()) {
        check(bias.rank() == 1 && bias.dim(0) == cout, "conv2d: bias dim mismatch");
        parents.push_back(bias.node());
    }
    auto out = make_op_node({cout, ho, wo}, parents);

    const real* px = x.data();
    const real* pw = w.data();
    const real* pb = bias.defined() ? bias.data() : nullptr;

#pragma omp parallel for schedule(static)
    for (long oc = 0; oc < cout; ++oc) {
        real* po = out->value.data() + oc * ho * wo;
        for (long i = 0; i < ho; ++i) {
            for (long j = 0; j < wo; ++j) {
                real acc = pb ? pb[oc] : 0.0;
                const long bi = i * stride_h - pad_h, bj = j * stride_w - pad_w;
                for (long ic = 0; ic < cin; ++ic) {
                    const real* xr = px + ic * h * win;
                    const real* wr = pw + ((oc * cin + ic) * kh) * kw;
                    for (long a = 0; a < kh; ++a) {
                        const long r = bi + a;
                        if (r < 0 || r >= h) continue;
                        for (long b = 0; b < kw; ++b) {
                            const long c = bj + b;
                            if (c >= 0 && c < win) acc += wr[a * kw + b] * xr[r * win + c];
                        }
                    }
                }
                po[i * wo + j] = acc;
            }
        }
    }

    if (out->requires_grad) {
        Node* o = out.get();
        Node* xn = x.node().get();
        Node* wn = w.node().get();
        Node* bn = bias.defined() ? bias.node().get() : nullptr;
        out->backward = [=] {
            const real* go = o->grad.data();
            if (xn->requires_grad) {
                xn->ensure_grad();
#pragma omp parallel for schedule(static)
                for (long ic = 0; ic < cin; ++ic) {
                    real* gx = xn->grad.data() + ic * h * win;
                    for (long oc = 0; oc < cout; ++oc) {
                        const real* wr = wn->value.data() + ((oc * cin + ic) * kh) * kw;
                        const real* gr = go + oc * ho * wo;
                        for (long i = 0; i < ho; ++i) {
                            const long bi = i * stride_h - pad_h;
                            for (long j = 0; j < wo; ++j) {
                                const long bj = j * stride_w - pad_w;
                                const real gv = gr[i * wo + j];
                                for (long a = 0; a < kh; ++a) {
                                    const long r = bi + a;
                                    if (r < 0 || r >= h) continue;
                                    for (long b = 0; b < kw; ++b) {
                                        const long c = bj + b;
                                        if (c >= 0 && c < win) gx[r * win + c] += wr[a * kw + b] * gv;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
#pragma omp parallel for schedule(static)
                for (long oc = 0; oc < cout; ++oc) {
                    const real* gr = go + oc * ho * wo;
                    for (long ic = 0; ic < cin; ++ic) {
                        const real* xr = xn->value.data() + ic * h * win;
                        real* gw = wn->grad.data() + ((oc * cin + ic) * kh) * kw;
                        for (long a = 0; a < kh; ++a) {
                            for (long b = 0; b < kw; ++b) {
                                real acc = 0.0;
                                for (long i = 0; i < ho; ++i) {
                                    const long r = i * stride_h - pad_h + a;
                                    if (r < 0 || r >= h) continue;
                                    for (long j = 0; j < wo; ++j) {
                                        const long c = j * stride_w - pad_w + b;
                                        if (c >= 0 && c < win) acc += gr[i * wo + j] * xr[r * win + c];
                                    }
                                }
                                gw[a * kw + b] += acc;
                            }
                        }
                    }
                }
            }
            if (bn && bn->requires_grad) {
                bn->ensure_grad();
                for (long oc = 0; oc < cout; ++oc) {
                    real acc = 0.0;
                    for (long i = 0; i < ho * wo; ++i) acc += go[oc * ho * wo + i];
                    bn->grad[(size_t)oc] += acc;
                }
            }
        };
    }
    return Tensor(out);
}

// Snake activation on [C, T]: x + sin^2(alpha*x)/(alpha+eps), alpha per channel.
inline Tensor snake(const Tensor& x, const Tensor& alpha) {
    check(x.rank() == 2 && alpha.rank() == 1 && alpha.dim(0) == x.dim(0),
          "snake: x [C,T] with per-channel alpha required");
    const long c = x.dim(0), t = x.dim(1);
    constexpr real kEps = 1e-9;
    auto out = make_op_node(x.shape(), {x.node(), alpha.node()});
    const real* px = x.data();
    const real* pa = alpha.data();
    for (long ic = 0; ic < c; ++ic) {
        const real a = pa[ic];
        const real inv = 1.0 / (a + kEps);
        for (long i = 0; i < t; ++i) {
            const real s = std::sin(a * px[ic * t + i]);
            out->value[(size_t)(ic * t + i)] = px[ic * t + i] + s * s * inv;
        }
    }
    if (out->requires_grad) {
        Node* o = out.get();
        Node* xn = x.node().get();
        Node* an = alpha.node().get();
        out->backward = [o, xn, an, c, t] {
            for (long ic = 0; ic < c; ++ic) {
                const real a = an->value[(size_t)ic];
                const real inv = 1.0 / (a + kEps);
                real ga = 0.0;
                for (long i = 0; i < t; ++i) {
                    const size_t k = (size_t)(ic * t + i);
                    const real xv = xn->value[k];
                    const real g = o->grad[k];
                    const real s2ax = std::sin(2.0 * a * xv);
                    if (xn->requires_grad) {
                        xn->ensure_grad();
                        xn->grad[k] += g * (1.0 + s2ax * a * inv);
                    }
                    const real sax = std::sin(a * xv);
                    ga += g * (xv * s2ax * inv - sax * sax * inv * inv);
                }
                if (an->requires_grad) {
                    an->ensure_grad();
                    an->grad[(size_t)ic] += ga;
                }
            }
        };
    }
    return Tensor(out);
}

}  // namespace hac
