#pragma once

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "hac/core/tensor.hpp"

namespace hac {

using EMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

namespace detail {
inline void axpy(std::vector<real>& dst, const std::vector<real>& src, real a = 1.0) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
}
}  // namespace detail

// ---- elementwise ------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = make_op_node(a.shape(), {a.node(), b.node()});
    const real* pa = a.data();
    const real* pb = b.data();
    for (long i = 0; i < out->numel(); ++i) out->value[(size_t)i] = pa[i] + pb[i];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        out->backward = [o, an, bn] {
            if (an->requires_grad) { an->ensure_grad(); detail::axpy(an->grad, o->grad); }
            if (bn->requires_grad) { bn->ensure_grad(); detail::axpy(bn->grad, o->grad); }
        };
    }
    return Tensor(out);
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = make_op_node(a.shape(), {a.node(), b.node()});
    const real* pa = a.data();
    const real* pb = b.data();
    for (long i = 0; i < out->numel(); ++i) out->value[(size_t)i] = pa[i] - pb[i];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        out->backward = [o, an, bn] {
            if (an->requires_grad) { an->ensure_grad(); detail::axpy(an->grad, o->grad); }
            if (bn->requires_grad) { bn->ensure_grad(); detail::axpy(bn->grad, o->grad, -1.0); }
        };
    }
    return Tensor(out);
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = make_op_node(a.shape(), {a.node(), b.node()});
    const real* pa = a.data();
    const real* pb = b.data();
    for (long i = 0; i < out->numel(); ++i) out->value[(size_t)i] = pa[i] * pb[i];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        out->backward = [o, an, bn] {
            if (an->requires_grad) {
                an->ensure_grad();
                for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i] * bn->value[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[i] += o->grad[i] * an->value[i];
            }
        };
    }
    return Tensor(out);
}

inline Tensor mul_scalar(const Tensor& a, real s) {
    auto out = make_op_node(a.shape(), {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < out->numel(); ++i) out->value[(size_t)i] = pa[i] * s;
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, s] {
            an->ensure_grad();
            detail::axpy(an->grad, o->grad, s);
        };
    }
    return Tensor(out);
}

inline Tensor add_scalar(const Tensor& a, real s) {
    auto out = make_op_node(a.shape(), {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < out->numel(); ++i) out->value[(size_t)i] = pa[i] + s;
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an] {
            an->ensure_grad();
            detail::axpy(an->grad, o->grad);
        };
    }
    return Tensor(out);
}

inline Tensor detach(const Tensor& a) {
    auto n = std::make_shared<Node>();
    n->shape = a.shape();
    n->value = a.values();
    n->requires_grad = false;
    n->id = next_node_id();
    return Tensor(n);
}

// ---- unary activations -------------------------------------------------------

namespace detail {
template <typename Fwd, typename Bwd>
Tensor pointwise(const Tensor& a, Fwd fwd, Bwd dydx) {
    auto out = make_op_node(a.shape(), {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < out->numel(); ++i) out->value[(size_t)i] = fwd(pa[i]);
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, dydx] {
            an->ensure_grad();
            for (size_t i = 0; i < o->grad.size(); ++i)
                an->grad[i] += o->grad[i] * dydx(an->value[i], o->value[i]);
        };
    }
    return Tensor(out);
}
}  // namespace detail

inline Tensor tanh_t(const Tensor& a) {
    return detail::pointwise(a, [](real x) { return std::tanh(x); },
                             [](real, real y) { return 1.0 - y * y; });
}

inline Tensor sigmoid_t(const Tensor& a) {
    return detail::pointwise(a, [](real x) { return 1.0 / (1.0 + std::exp(-x)); },
                             [](real, real y) { return y * (1.0 - y); });
}

inline Tensor leaky_relu(const Tensor& a, real slope = 0.1) {
    return detail::pointwise(a, [slope](real x) { return x >= 0 ? x : slope * x; },
                             [slope](real x, real) { return x >= 0 ? 1.0 : slope; });
}

inline Tensor gelu(const Tensor& a) {
    constexpr real kInvSqrt2 = 0.70710678118654752440;
    constexpr real kInvSqrt2Pi = 0.39894228040143267794;
    return detail::pointwise(
        a, [](real x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
        [](real x, real) {
            real cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
        });
}

// log(max(x, floor)) in the given base; zero slope below the floor.
inline Tensor log_clamp(const Tensor& a, real floor, real inv_log_base = 1.0) {
    return detail::pointwise(
        a,
        [floor, inv_log_base](real x) { return std::log(std::max(x, floor)) * inv_log_base; },
        [floor, inv_log_base](real x, real) { return x > floor ? inv_log_base / x : 0.0; });
}

// ---- matmul / linear ----------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 tensors required");
    check(a.dim(1) == b.dim(0),
          "matmul: inner dims " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const long m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto out = make_op_node({m, n}, {a.node(), b.node()});
    {
        ECMap A(a.data(), m, k), B(b.data(), k, n);
        EMap C(out->value.data(), m, n);
        C.noalias() = A * B;
    }
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        out->backward = [o, an, bn, m, k, n] {
            ECMap G(o->grad.data(), m, n);
            if (an->requires_grad) {
                an->ensure_grad();
                EMap dA(an->grad.data(), m, k);
                ECMap B(bn->value.data(), k, n);
                dA.noalias() += G * B.transpose();
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                EMap dB(bn->grad.data(), k, n);
                ECMap A(an->value.data(), m, k);
                dB.noalias() += A.transpose() * G;
            }
        };
    }
    return Tensor(out);
}

// x[m×in] * w[in×out] + bias[out] broadcast over rows
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    Tensor y = matmul(x, w);
    if (!bias.defined()) return y;
    check(bias.rank() == 1 && bias.dim(0) == y.dim(1), "linear: bias dim mismatch");
    auto out = make_op_node(y.shape(), {y.node(), bias.node()});
    const long m = y.dim(0), n = y.dim(1);
    const real* py = y.data();
    const real* pb = bias.data();
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < n; ++j) out->value[(size_t)(i * n + j)] = py[i * n + j] + pb[j];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* yn = y.node().get();
        Node* bn = bias.node().get();
        out->backward = [o, yn, bn, m, n] {
            if (yn->requires_grad) { yn->ensure_grad(); detail::axpy(yn->grad, o->grad); }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (long i = 0; i < m; ++i)
                    for (long j = 0; j < n; ++j) bn->grad[(size_t)j] += o->grad[(size_t)(i * n + j)];
            }
        };
    }
    return Tensor(out);
}

inline Tensor transpose2d(const Tensor& a) {
    check(a.rank() == 2, "transpose2d: rank-2 required");
    const long m = a.dim(0), n = a.dim(1);
    auto out = make_op_node({n, m}, {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < n; ++j) out->value[(size_t)(j * m + i)] = pa[i * n + j];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, m, n] {
            an->ensure_grad();
            for (long i = 0; i < m; ++i)
                for (long j = 0; j < n; ++j) an->grad[(size_t)(i * n + j)] += o->grad[(size_t)(j * m + i)];
        };
    }
    return Tensor(out);
}

inline Tensor reshape(const Tensor& a, Shape shape) {
    check(shape_numel(shape) == a.numel(), "reshape: numel mismatch");
    auto out = make_op_node(std::move(shape), {a.node()});
    out->value = a.values();
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an] {
            an->ensure_grad();
            detail::axpy(an->grad, o->grad);
        };
    }
    return Tensor(out);
}

// ---- slicing / concatenation ---------------------------------------------------

inline Tensor slice_rows(const Tensor& a, long r0, long r1) {
    check(a.rank() == 2 && 0 <= r0 && r0 < r1 && r1 <= a.dim(0), "slice_rows: bad range");
    const long n = a.dim(1);
    auto out = make_op_node({r1 - r0, n}, {a.node()});
    std::copy(a.data() + r0 * n, a.data() + r1 * n, out->value.begin());
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, r0, n] {
            an->ensure_grad();
            for (size_t i = 0; i < o->grad.size(); ++i) an->grad[(size_t)(r0 * n) + i] += o->grad[i];
        };
    }
    return Tensor(out);
}

inline Tensor slice_cols(const Tensor& a, long c0, long c1) {
    check(a.rank() == 2 && 0 <= c0 && c0 < c1 && c1 <= a.dim(1), "slice_cols: bad range");
    const long m = a.dim(0), n = a.dim(1), w = c1 - c0;
    auto out = make_op_node({m, w}, {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < w; ++j) out->value[(size_t)(i * w + j)] = pa[i * n + c0 + j];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, m, n, w, c0] {
            an->ensure_grad();
            for (long i = 0; i < m; ++i)
                for (long j = 0; j < w; ++j)
                    an->grad[(size_t)(i * n + c0 + j)] += o->grad[(size_t)(i * w + j)];
        };
    }
    return Tensor(out);
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    check(!parts.empty(), "concat_cols: empty list");
    const long m = parts[0].dim(0);
    long total = 0;
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& p : parts) {
        check(p.rank() == 2 && p.dim(0) == m, "concat_cols: row mismatch");
        total += p.dim(1);
        parents.push_back(p.node());
    }
    auto out = make_op_node({m, total}, parents);
    long off = 0;
    for (const auto& p : parts) {
        const long w = p.dim(1);
        const real* pp = p.data();
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < w; ++j) out->value[(size_t)(i * total + off + j)] = pp[i * w + j];
        off += w;
    }
    if (out->requires_grad) {
        Node* o = out.get();
        std::vector<Node*> srcs;
        std::vector<long> widths;
        for (const auto& p : parts) {
            srcs.push_back(p.node().get());
            widths.push_back(p.dim(1));
        }
        out->backward = [o, srcs, widths, m, total] {
            long off2 = 0;
            for (size_t s = 0; s < srcs.size(); ++s) {
                const long w = widths[s];
                if (srcs[s]->requires_grad) {
                    srcs[s]->ensure_grad();
                    for (long i = 0; i < m; ++i)
                        for (long j = 0; j < w; ++j)
                            srcs[s]->grad[(size_t)(i * w + j)] += o->grad[(size_t)(i * total + off2 + j)];
                }
                off2 += w;
            }
        };
    }
    return Tensor(out);
}

// slice along the last axis of a rank-2 or rank-3 tensor
inline Tensor slice_last(const Tensor& a, long c0, long c1) {
    const int r = a.rank();
    check(r == 2 || r == 3, "slice_last: rank-2/3 required");
    if (r == 2) return slice_cols(a, c0, c1);
    const long d0 = a.dim(0), d1 = a.dim(1), d2 = a.dim(2), w = c1 - c0;
    check(0 <= c0 && c0 < c1 && c1 <= d2, "slice_last: bad range");
    auto out = make_op_node({d0, d1, w}, {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < d0 * d1; ++i)
        for (long j = 0; j < w; ++j) out->value[(size_t)(i * w + j)] = pa[i * d2 + c0 + j];
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, d0, d1, d2, w, c0] {
            an->ensure_grad();
            for (long i = 0; i < d0 * d1; ++i)
                for (long j = 0; j < w; ++j)
                    an->grad[(size_t)(i * d2 + c0 + j)] += o->grad[(size_t)(i * w + j)];
        };
    }
    return Tensor(out);
}

// ---- reductions / losses -------------------------------------------------------

inline Tensor sum_all(const Tensor& a) {
    auto out = make_op_node({1}, {a.node()});
    out->value[0] = std::accumulate(a.values().begin(), a.values().end(), 0.0);
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an] {
            an->ensure_grad();
            for (auto& g : an->grad) g += o->grad[0];
        };
    }
    return Tensor(out);
}

inline Tensor mean_all(const Tensor& a) {
    return mul_scalar(sum_all(a), 1.0 / (real)a.numel());
}

inline Tensor l1_mean(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "l1_mean: shape mismatch");
    auto out = make_op_node({1}, {a.node(), b.node()});
    const real* pa = a.data();
    const real* pb = b.data();
    const long n = a.numel();
    real acc = 0.0;
    for (long i = 0; i < n; ++i) acc += std::abs(pa[i] - pb[i]);
    out->value[0] = acc / (real)n;
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        out->backward = [o, an, bn, n] {
            const real g = o->grad[0] / (real)n;
            for (long i = 0; i < n; ++i) {
                const real d = an->value[(size_t)i] - bn->value[(size_t)i];
                const real s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                if (an->requires_grad) { an->ensure_grad(); an->grad[(size_t)i] += g * s; }
                if (bn->requires_grad) { bn->ensure_grad(); bn->grad[(size_t)i] -= g * s; }
            }
        };
    }
    return Tensor(out);
}

inline Tensor mse_mean(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "mse_mean: shape mismatch");
    auto out = make_op_node({1}, {a.node(), b.node()});
    const real* pa = a.data();
    const real* pb = b.data();
    const long n = a.numel();
    real acc = 0.0;
    for (long i = 0; i < n; ++i) {
        const real d = pa[i] - pb[i];
        acc += d * d;
    }
    out->value[0] = acc / (real)n;
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        Node* bn = b.node().get();
        out->backward = [o, an, bn, n] {
            const real g = 2.0 * o->grad[0] / (real)n;
            for (long i = 0; i < n; ++i) {
                const real d = an->value[(size_t)i] - bn->value[(size_t)i];
                if (an->requires_grad) { an->ensure_grad(); an->grad[(size_t)i] += g * d; }
                if (bn->requires_grad) { bn->ensure_grad(); bn->grad[(size_t)i] -= g * d; }
            }
        };
    }
    return Tensor(out);
}

// mean over all elements of (x - c)^2 against a constant scalar
inline Tensor mse_to_const(const Tensor& a, real c) {
    auto out = make_op_node({1}, {a.node()});
    const real* pa = a.data();
    const long n = a.numel();
    real acc = 0.0;
    for (long i = 0; i < n; ++i) {
        const real d = pa[i] - c;
        acc += d * d;
    }
    out->value[0] = acc / (real)n;
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, c, n] {
            an->ensure_grad();
            const real g = 2.0 * o->grad[0] / (real)n;
            for (long i = 0; i < n; ++i) an->grad[(size_t)i] += g * (an->value[(size_t)i] - c);
        };
    }
    return Tensor(out);
}

// ---- row-wise softmax and layer norm --------------------------------------------

inline Tensor softmax_rows(const Tensor& a) {
    check(a.rank() == 2, "softmax_rows: rank-2 required");
    const long m = a.dim(0), n = a.dim(1);
    auto out = make_op_node(a.shape(), {a.node()});
    const real* pa = a.data();
    for (long i = 0; i < m; ++i) {
        real mx = -1e300;
        for (long j = 0; j < n; ++j) mx = std::max(mx, pa[i * n + j]);
        real z = 0.0;
        for (long j = 0; j < n; ++j) {
            const real e = std::exp(pa[i * n + j] - mx);
            out->value[(size_t)(i * n + j)] = e;
            z += e;
        }
        for (long j = 0; j < n; ++j) out->value[(size_t)(i * n + j)] /= z;
    }
    if (out->requires_grad) {
        Node* o = out.get();
        Node* an = a.node().get();
        out->backward = [o, an, m, n] {
            an->ensure_grad();
            for (long i = 0; i < m; ++i) {
                real dot = 0.0;
                for (long j = 0; j < n; ++j)
                    dot += o->grad[(size_t)(i * n + j)] * o->value[(size_t)(i * n + j)];
                for (long j = 0; j < n; ++j) {
                    const size_t k = (size_t)(i * n + j);
                    an->grad[k] += o->value[k] * (o->grad[k] - dot);
                }
            }
        };
    }
    return Tensor(out);
}

inline Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, real eps = 1e-5) {
    check(x.rank() == 2, "layer_norm_rows: rank-2 required");
    const long m = x.dim(0), n = x.dim(1);
    check(gain.rank() == 1 && gain.dim(0) == n && bias.rank() == 1 && bias.dim(0) == n,
          "layer_norm_rows: affine dim mismatch");
    auto out = make_op_node(x.shape(), {x.node(), gain.node(), bias.node()});
    std::vector<real> inv_std((size_t)m), mean((size_t)m);
    const real* px = x.data();
    const real* pg = gain.data();
    const real* pb = bias.data();
    for (long i = 0; i < m; ++i) {
        real mu = 0.0;
        for (long j = 0; j < n; ++j) mu += px[i * n + j];
        mu /= (real)n;
        real var = 0.0;
        for (long j = 0; j < n; ++j) {
            const real d = px[i * n + j] - mu;
            var += d * d;
        }
        var /= (real)n;
        const real is = 1.0 / std::sqrt(var + eps);
        mean[(size_t)i] = mu;
        inv_std[(size_t)i] = is;
        for (long j = 0; j < n; ++j)
            out->value[(size_t)(i * n + j)] = (px[i * n + j] - mu) * is * pg[j] + pb[j];
    }
    if (out->requires_grad) {
        Node* o = out.get();
        Node* xn = x.node().get();
        Node* gn = gain.node().get();
        Node* bn = bias.node().get();
        out->backward = [o, xn, gn, bn, m, n, mean, inv_std] {
            for (long i = 0; i < m; ++i) {
                const real mu = mean[(size_t)i];
                const real is = inv_std[(size_t)i];
                // dy in terms of xhat
                real sum_gdy = 0.0, sum_gdy_xhat = 0.0;
                for (long j = 0; j < n; ++j) {
                    const size_t k = (size_t)(i * n + j);
                    const real xhat = (xn->value[k] - mu) * is;
                    const real gdy = o->grad[k] * gn->value[(size_t)j];
                    sum_gdy += gdy;
                    sum_gdy_xhat += gdy * xhat;
                    if (gn->requires_grad) { gn->ensure_grad(); gn->grad[(size_t)j] += o->grad[k] * xhat; }
                    if (bn->requires_grad) { bn->ensure_grad(); bn->grad[(size_t)j] += o->grad[k]; }
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    for (long j = 0; j < n; ++j) {
                        const size_t k = (size_t)(i * n + j);
                        const real xhat = (xn->value[k] - mu) * is;
                        const real gdy = o->grad[k] * gn->value[(size_t)j];
                        xn->grad[k] += is * (gdy - sum_gdy / (real)n - xhat * sum_gdy_xhat / (real)n);
                    }
                }
            }
        };
    }
    return Tensor(out);
}

// ---- codebook row gather ---------------------------------------------------------

// out[i, :] = table[idx[i], :]; backward scatter-adds into the table.
inline Tensor rows_select(const Tensor& table, const std::vector<long>& idx) {
    check(table.rank() == 2, "rows_select: rank-2 table required");
    const long k = table.dim(0), d = table.dim(1), f = (long)idx.size();
    for (long i : idx) check(0 <= i && i < k, "rows_select: index out of range");
    auto out = make_op_node({f, d}, {table.node()});
    const real* pt = table.data();
    for (long i = 0; i < f; ++i)
        std::copy(pt + idx[(size_t)i] * d, pt + (idx[(size_t)i] + 1) * d, out->value.begin() + i * d);
    if (out->requires_grad) {
        Node* o = out.get();
        Node* tn = table.node().get();
        out->backward = [o, tn, idx, d, f] {
            tn->ensure_grad();
            for (long i = 0; i < f; ++i)
                for (long j = 0; j < d; ++j)
                    tn->grad[(size_t)(idx[(size_t)i] * d + j)] += o->grad[(size_t)(i * d + j)];
        };
    }
    return Tensor(out);
}

}  // namespace hac
