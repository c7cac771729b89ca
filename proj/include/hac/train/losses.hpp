#pragma once

#include "hac/core/signal_ops.hpp"
#include "hac/train/discriminator.hpp"

namespace hac {

// log10 mel spectrogram through the autograd pipeline
inline Tensor log_mel_tensor(const Tensor& x, long window, long n_mels, long sample_rate,
                             real floor_val) {
    StftSpec spec{window, window / 4};
    Tensor mag = complex_magnitude(stft_complex(x, spec));  // [frames, bins]
    Mat fb = mel_filterbank(n_mels, window, sample_rate);
    Tensor fbt = Tensor::from_data({n_mels, window / 2 + 1}, fb.v, false);
    Tensor mel = matmul(mag, transpose2d(fbt));  // [frames, n_mels]
    constexpr real kInvLn10 = 0.43429448190325176;
    return log_clamp(mel, floor_val, kInvLn10);
}

// Mean over scales of the L1 distance between log-mel spectrograms. Both
// signals go through the same pipeline so identical inputs give exactly zero.
inline Tensor mel_reconstruction_loss(const Tensor& prediction, const Tensor& reference,
                                      const MelLossConfig& cfg, long sample_rate) {
    check(prediction.rank() == 1 && reference.rank() == 1, "mel loss: rank-1 signals required");
    check(prediction.dim(0) == reference.dim(0),
          "mel loss: length mismatch " + std::to_string(prediction.dim(0)) + " vs " +
              std::to_string(reference.dim(0)));
    cfg.validate();
    Tensor total;
    for (size_t s = 0; s < cfg.windows.size(); ++s) {
        Tensor a = log_mel_tensor(prediction, cfg.windows[s], cfg.mels[s], sample_rate,
                                  cfg.floor_val);
        Tensor b = log_mel_tensor(reference, cfg.windows[s], cfg.mels[s], sample_rate,
                                  cfg.floor_val);
        Tensor term = l1_mean(a, b);
        total = total.defined() ? add(total, term) : term;
    }
    return mul_scalar(total, 1.0 / (real)cfg.windows.size());
}

struct GanLosses {
    Tensor generator_adv;   // least-squares toward 1 on fake logits
    Tensor discriminator;   // real toward 1, fake toward 0
    Tensor feature_match;   // mean L1 over all feature maps, real side frozen
};

// Least-squares objectives averaged over sub-discriminators.
inline GanLosses gan_losses(const std::vector<DiscOutput>& real_outs,
                            const std::vector<DiscOutput>& fake_outs) {
    check(real_outs.size() == fake_outs.size() && !real_outs.empty(),
          "gan losses: sub-discriminator mismatch");
    GanLosses out;
    Tensor gen, disc, feat;
    long feature_maps = 0;
    for (size_t i = 0; i < real_outs.size(); ++i) {
        check(real_outs[i].features.size() == fake_outs[i].features.size(),
              "gan losses: feature map structure mismatch");
        Tensor g = mse_to_const(fake_outs[i].logits, 1.0);
        Tensor d =
            add(mse_to_const(real_outs[i].logits, 1.0), mse_to_const(fake_outs[i].logits, 0.0));
        gen = gen.defined() ? add(gen, g) : g;
        disc = disc.defined() ? add(disc, d) : d;
        for (size_t f = 0; f < real_outs[i].features.size(); ++f) {
            Tensor fm = l1_mean(fake_outs[i].features[f], detach(real_outs[i].features[f]));
            feat = feat.defined() ? add(feat, fm) : fm;
            ++feature_maps;
        }
    }
    const real inv = 1.0 / (real)real_outs.size();
    out.generator_adv = mul_scalar(gen, inv);
    out.discriminator = mul_scalar(disc, inv);
    out.feature_match = feature_maps > 0 ? mul_scalar(feat, 1.0 / (real)feature_maps)
                                         : Tensor::scalar(0.0);
    return out;
}

}  // namespace hac
