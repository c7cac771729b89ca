#pragma once

#include "hac/nn/layers.hpp"

namespace hac {

struct TransformerConfig {
    long layers = 4;
    long heads = 8;
    long model_dim = 768;
    long ff_dim = 3072;
    long pos_kernel = 15;  // odd, so the conv keeps frame count
    long pos_groups = 16;
    bool use_positional = true;  // test hook: false gives pure self-attention

    void validate() const {
        check(layers >= 1 && heads >= 1 && model_dim >= 1 && ff_dim >= 1,
              "transformer: sizes must be positive");
        check(model_dim % heads == 0, "transformer: model_dim must divide by heads");
        check(pos_kernel % 2 == 1, "transformer: pos_kernel must be odd");
        check(model_dim % pos_groups == 0, "transformer: pos_groups must divide model_dim");
    }
};

namespace nn_detail {

struct SelfAttention {
    LinearLayer q, k, v, o;
    long heads = 1;

    SelfAttention() = default;
    SelfAttention(long dim, long heads_, Rng& rng)
        : q(dim, dim, rng), k(dim, dim, rng), v(dim, dim, rng), o(dim, dim, rng), heads(heads_) {}

    Tensor forward(const Tensor& x) const {
        const long dm = x.dim(1);
        const long dh = dm / heads;
        Tensor qs = q.forward(x), ks = k.forward(x), vs = v.forward(x);
        std::vector<Tensor> outs;
        outs.reserve((size_t)heads);
        const real scale = 1.0 / std::sqrt((real)dh);
        for (long h = 0; h < heads; ++h) {
            Tensor qh = slice_cols(qs, h * dh, (h + 1) * dh);
            Tensor kh = slice_cols(ks, h * dh, (h + 1) * dh);
            Tensor vh = slice_cols(vs, h * dh, (h + 1) * dh);
            Tensor scores = mul_scalar(matmul(qh, transpose2d(kh)), scale);
            outs.push_back(matmul(softmax_rows(scores), vh));
        }
        return o.forward(heads == 1 ? outs[0] : concat_cols(outs));
    }

    void collect(ParamMap& m, const std::string& p) const {
        q.collect(m, p + ".q");
        k.collect(m, p + ".k");
        v.collect(m, p + ".v");
        o.collect(m, p + ".o");
    }
};

struct TransformerBlock {
    LayerNormLayer ln1, ln2;
    SelfAttention attn;
    LinearLayer ff1, ff2;

    TransformerBlock() = default;
    TransformerBlock(const TransformerConfig& cfg, Rng& rng)
        : ln1(cfg.model_dim),
          ln2(cfg.model_dim),
          attn(cfg.model_dim, cfg.heads, rng),
          ff1(cfg.model_dim, cfg.ff_dim, rng),
          ff2(cfg.ff_dim, cfg.model_dim, rng) {}

    Tensor forward(const Tensor& x) const {
        Tensor h = add(x, attn.forward(ln1.forward(x)));
        return add(h, ff2.forward(gelu(ff1.forward(ln2.forward(h)))));
    }

    void collect(ParamMap& m, const std::string& p) const {
        ln1.collect(m, p + ".ln1");
        attn.collect(m, p + ".attn");
        ln2.collect(m, p + ".ln2");
        ff1.collect(m, p + ".ff1");
        ff2.collect(m, p + ".ff2");
    }
};

}  // namespace nn_detail

// Pre-norm transformer over frame embeddings with a grouped-conv positional
// stage; maps [F, D] -> [F, D] through model_dim.
struct BranchEncoder {
    TransformerConfig cfg;
    LinearLayer in_proj;
    Conv1dLayer pos_conv;
    std::vector<nn_detail::TransformerBlock> blocks;
    LayerNormLayer final_ln;
    LinearLayer out_proj;

    BranchEncoder() = default;
    BranchEncoder(long embed_dim, const TransformerConfig& c, Rng& rng) : cfg(c) {
        cfg.validate();
        in_proj = LinearLayer(embed_dim, cfg.model_dim, rng);
        pos_conv = Conv1dLayer(cfg.model_dim, cfg.model_dim, cfg.pos_kernel, rng, 1,
                               (cfg.pos_kernel - 1) / 2, 1, cfg.pos_groups);
        for (long i = 0; i < cfg.layers; ++i) blocks.emplace_back(cfg, rng);
        final_ln = LayerNormLayer(cfg.model_dim);
        out_proj = LinearLayer(cfg.model_dim, embed_dim, rng);
    }

    Tensor forward(const Tensor& z) const {
        Tensor h = in_proj.forward(z);
        if (cfg.use_positional) {
            Tensor ht = transpose2d(h);  // [dm, F] for the grouped conv
            Tensor pos = gelu(pos_conv.forward(ht));
            h = add(h, transpose2d(pos));
        }
        for (const auto& b : blocks) h = b.forward(h);
        return out_proj.forward(final_ln.forward(h));
    }

    void collect(ParamMap& m, const std::string& p) const {
        in_proj.collect(m, p + ".in_proj");
        pos_conv.collect(m, p + ".pos_conv");
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect(m, p + ".block" + std::to_string(i));
        final_ln.collect(m, p + ".final_ln");
        out_proj.collect(m, p + ".out_proj");
    }
};

}  // namespace hac
