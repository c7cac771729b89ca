#pragma once

#include "hac/codec/encoder.hpp"

namespace hac {

// Transposed-conv upsampling followed by residual units at the output rate.
struct DecoderBlock {
    SnakeLayer act;
    ConvTr1dLayer up;
    std::vector<ResidualUnit> units;

    DecoderBlock() = default;
    DecoderBlock(long cin, long cout, long stride, long n_units, Rng& rng) : act(cin) {
        const long pad = (stride + 1) / 2;
        up = ConvTr1dLayer(cin, cout, 2 * stride, rng, stride, pad, 2 * pad - stride);
        for (long u = 0; u < n_units; ++u) {
            long dil = 1;
            for (long i = 0; i < u; ++i) dil *= 3;
            units.emplace_back(cout, dil, rng);
        }
    }

    Tensor forward(const Tensor& x) const {
        Tensor h = up.forward(act.forward(x));
        for (const auto& u : units) h = u.forward(h);
        return h;
    }
    void collect(ParamMap& m, const std::string& p) const {
        act.collect(m, p + ".act");
        up.collect(m, p + ".up");
        for (size_t i = 0; i < units.size(); ++i)
            units[i].collect(m, p + ".res" + std::to_string(i));
    }
};

// Upsampling convolutional decoder, [D, F] -> [1, F*prod(strides)], tanh-bounded.
struct Decoder {
    Conv1dLayer init;
    std::vector<DecoderBlock> blocks;
    SnakeLayer final_act;
    Conv1dLayer final_conv;

    Decoder() = default;
    Decoder(const CodecConfig& cfg, Rng& rng) {
        const auto& ch = cfg.decoder_channels;
        init = Conv1dLayer(cfg.embed_dim, ch[0], 7, rng, 1, 3);
        std::vector<long> strides(cfg.encoder_strides.rbegin(), cfg.encoder_strides.rend());
        for (size_t i = 0; i < strides.size(); ++i)
            blocks.emplace_back(ch[i], ch[i + 1], strides[i], cfg.residual_units, rng);
        final_act = SnakeLayer(ch.back());
        final_conv = Conv1dLayer(ch.back(), 1, 7, rng, 1, 3);
    }

    Tensor forward(const Tensor& z_q) const {
        check(z_q.rank() == 2, "decoder: input must be [D, F]");
        Tensor h = init.forward(z_q);
        for (const auto& b : blocks) h = b.forward(h);
        return tanh_t(final_conv.forward(final_act.forward(h)));
    }

    void collect(ParamMap& m, const std::string& p) const {
        init.collect(m, p + ".init");
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].collect(m, p + ".block" + std::to_string(i));
        final_act.collect(m, p + ".final_act");
        final_conv.collect(m, p + ".final_conv");
    }
};

}  // namespace hac
