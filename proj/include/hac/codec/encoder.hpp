#pragma once

#include "hac/codec/config.hpp"
#include "hac/nn/layers.hpp"

namespace hac {

// snake -> dilated conv(k=7) -> snake -> conv(k=1), with a skip connection
struct ResidualUnit {
    SnakeLayer act1, act2;
    Conv1dLayer conv1, conv2;

    ResidualUnit() = default;
    ResidualUnit(long channels, long dilation, Rng& rng)
        : act1(channels),
          act2(channels),
          conv1(channels, channels, 7, rng, 1, 3 * dilation, dilation),
          conv2(channels, channels, 1, rng) {}

    Tensor forward(const Tensor& x) const {
        return add(x, conv2.forward(act2.forward(conv1.forward(act1.forward(x)))));
    }
    void collect(ParamMap& m, const std::string& p) const {
        act1.collect(m, p + ".act1");
        conv1.collect(m, p + ".conv1");
        act2.collect(m, p + ".act2");
        conv2.collect(m, p + ".conv2");
    }
};

// Residual units at the input rate followed by a strided downsampling conv.
// kernel 2*s with pad ceil(s/2) keeps T_out = T/s for stride-divisible T.
struct EncoderBlock {
    std::vector<ResidualUnit> units;
    SnakeLayer act;
    Conv1dLayer down;

    EncoderBlock() = default;
    EncoderBlock(long cin, long cout, long stride, long n_units, Rng& rng) : act(cin) {
        for (long u = 0; u < n_units; ++u) {
            long dil = 1;
            for (long i = 0; i < u; ++i) dil *= 3;
            units.emplace_back(cin, dil, rng);
        }
        down = Conv1dLayer(cin, cout, 2 * stride, rng, stride, (stride + 1) / 2);
    }

    Tensor forward(const Tensor& x) const {
        Tensor h = x;
        for (const auto& u : units) h = u.forward(h);
        return down.forward(act.forward(h));
    }
    void collect(ParamMap& m, const std::string& p) const {
        for (size_t i = 0; i < units.size(); ++i)
            units[i].collect(m, p + ".res" + std::to_string(i));
        act.collect(m, p + ".act");
        down.collect(m, p + ".down");
    }
};

// Strided convolutional encoder, [1, T] -> [D, T/prod(strides)].
struct Encoder {
    Conv1dLayer init;
    std::vector<EncoderBlock> blocks;
    SnakeLayer final_act;
    Conv1dLayer final_conv;
    long factor = 1;

    Encoder() = default;
    Encoder(const CodecConfig& cfg, Rng& rng) {
        const auto& ch = cfg.encoder_channels;
        init = Conv1dLayer(1, ch[0], 7, rng, 1, 3);
        for (size_t i = 0; i < cfg.encoder_strides.size(); ++i) {
            blocks.emplace_back(ch[i], ch[i + 1], cfg.encoder_strides[i], cfg.residual_units, rng);
            factor *= cfg.encoder_strides[i];
        }
        final_act = SnakeLayer(ch.back());
        final_conv = Conv1dLayer(ch.back(), cfg.embed_dim, 3, rng, 1, 1);
    }

    // x: [1, T] with T a multiple of the stride product
    Tensor forward(const Tensor& x) const {
        check(x.rank() == 2 && x.dim(0) == 1, "encoder: input must be [1, T]");
        check(x.dim(1) % factor == 0, "encoder: length must be a stride-product multiple");
        Tensor h = init.forward(x);
        for (const auto& b : blocks) h = b.forward(h);
        return final_conv.forward(final_act.forward(h));
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
