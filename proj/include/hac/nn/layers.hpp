#pragma once

#include "hac/core/conv.hpp"
#include "hac/nn/module.hpp"

namespace hac {

struct LinearLayer {
    Tensor w, b;

    LinearLayer() = default;
    LinearLayer(long in, long out, Rng& rng) {
        w = init_normal({in, out}, rng, 1.0 / std::sqrt((real)in));
        b = init_const({out}, 0.0);
    }
    Tensor forward(const Tensor& x) const { return linear(x, w, b); }
    void collect(ParamMap& m, const std::string& p) const {
        add_param(m, p + ".w", w);
        add_param(m, p + ".b", b);
    }
};

struct Conv1dLayer {
    Tensor w, b;
    long stride = 1, pad = 0, dil = 1, groups = 1;

    Conv1dLayer() = default;
    Conv1dLayer(long cin, long cout, long k, Rng& rng, long stride_ = 1, long pad_ = 0,
                long dil_ = 1, long groups_ = 1)
        : stride(stride_), pad(pad_), dil(dil_), groups(groups_) {
        const real scale = 1.0 / std::sqrt((real)(cin / groups_ * k));
        w = init_normal({cout, cin / groups_, k}, rng, scale);
        b = init_const({cout}, 0.0);
    }
    Tensor forward(const Tensor& x) const { return conv1d(x, w, b, stride, pad, dil, groups); }
    void collect(ParamMap& m, const std::string& p) const {
        add_param(m, p + ".w", w);
        add_param(m, p + ".b", b);
    }
};

struct ConvTr1dLayer {
    Tensor w, b;
    long stride = 1, pad = 0, out_pad = 0;

    ConvTr1dLayer() = default;
    ConvTr1dLayer(long cin, long cout, long k, Rng& rng, long stride_, long pad_, long out_pad_)
        : stride(stride_), pad(pad_), out_pad(out_pad_) {
        const real scale = 1.0 / std::sqrt((real)(cin * k) / (real)stride_);
        w = init_normal({cin, cout, k}, rng, scale);
        b = init_const({cout}, 0.0);
    }
    Tensor forward(const Tensor& x) const {
        return conv_transpose1d(x, w, b, stride, pad, out_pad);
    }
    void collect(ParamMap& m, const std::string& p) const {
        add_param(m, p + ".w", w);
        add_param(m, p + ".b", b);
    }
};

struct Conv2dLayer {
    Tensor w, b;
    long stride_h = 1, stride_w = 1, pad_h = 0, pad_w = 0;

    Conv2dLayer() = default;
    Conv2dLayer(long cin, long cout, long kh, long kw, Rng& rng, long sh, long sw, long ph, long pw)
        : stride_h(sh), stride_w(sw), pad_h(ph), pad_w(pw) {
        const real scale = 1.0 / std::sqrt((real)(cin * kh * kw));
        w = init_normal({cout, cin, kh, kw}, rng, scale);
        b = init_const({cout}, 0.0);
    }
    Tensor forward(const Tensor& x) const {
        return conv2d(x, w, b, stride_h, stride_w, pad_h, pad_w);
    }
    void collect(ParamMap& m, const std::string& p) const {
        add_param(m, p + ".w", w);
        add_param(m, p + ".b", b);
    }
};

struct LayerNormLayer {
    Tensor gain, bias;

    LayerNormLayer() = default;
    explicit LayerNormLayer(long dim) {
        gain = init_const({dim}, 1.0);
        bias = init_const({dim}, 0.0);
    }
    Tensor forward(const Tensor& x) const { return layer_norm_rows(x, gain, bias); }
    void collect(ParamMap& m, const std::string& p) const {
        add_param(m, p + ".gain", gain);
        add_param(m, p + ".bias", bias);
    }
};

struct SnakeLayer {
    Tensor alpha;

    SnakeLayer() = default;
    explicit SnakeLayer(long channels) { alpha = init_const({channels}, 1.0); }
    Tensor forward(const Tensor& x) const { return snake(x, alpha); }
    void collect(ParamMap& m, const std::string& p) const { add_param(m, p + ".alpha", alpha); }
};

}  // namespace hac
