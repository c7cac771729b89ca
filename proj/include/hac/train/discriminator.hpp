#pragma once

#include "hac/codec/config.hpp"
#include "hac/core/signal_ops.hpp"
#include "hac/nn/layers.hpp"

namespace hac {

struct DiscOutput {
    Tensor logits;                 // final map of one sub-discriminator
    std::vector<Tensor> features;  // intermediate maps, outermost first
};

namespace disc_detail {

// Periodic structure probe: fold the signal into a [T/p, p] grid and run a
// strided 2-D conv stack down the time axis.
struct PeriodDiscriminator {
    long period = 2;
    std::vector<Conv2dLayer> convs;
    Conv2dLayer final;

    PeriodDiscriminator() = default;
    PeriodDiscriminator(long p, long base_channels, long n_layers, Rng& rng) : period(p) {
        long cin = 1;
        long cout = base_channels;
        for (long i = 0; i < n_layers; ++i) {
            convs.emplace_back(cin, cout, 5, 1, rng, 3, 1, 2, 0);
            cin = cout;
            cout = std::min<long>(cout * 2, base_channels * 8);
        }
        final = Conv2dLayer(cin, 1, 3, 1, rng, 1, 1, 1, 0);
    }

    DiscOutput forward(const Tensor& x) const {
        check(x.rank() == 1, "period discriminator: rank-1 signal required");
        const long t = x.dim(0);
        const long rows = (t + period - 1) / period;
        // zero-pad to a whole number of periods
        std::vector<real> grid((size_t)(rows * period), 0.0);
        std::copy(x.data(), x.data() + t, grid.begin());
        Tensor g = Tensor(make_op_node({1, rows, period}, {x.node()}));
        std::copy(grid.begin(), grid.end(), g.values().begin());
        if (g.requires_grad()) {
            Node* o = g.node().get();
            Node* xn = x.node().get();
            g.node()->backward = [o, xn, t] {
                xn->ensure_grad();
                for (long i = 0; i < t; ++i) xn->grad[(size_t)i] += o->grad[(size_t)i];
            };
        }
        DiscOutput out;
        Tensor h = g;
        for (const auto& c : convs) {
            h = leaky_relu(c.forward(h), 0.1);
            out.features.push_back(h);
        }
        out.logits = final.forward(h);
        return out;
    }

    void collect(ParamMap& m, const std::string& p) const {
        for (size_t i = 0; i < convs.size(); ++i)
            convs[i].collect(m, p + ".conv" + std::to_string(i));
        final.collect(m, p + ".final");
    }
};

// Complex-spectrogram probe over one FFT size, one conv stack per band.
struct BandDiscriminator {
    long fft = 512;
    long n_bands = 3;
    std::vector<std::vector<Conv2dLayer>> band_convs;
    Conv2dLayer final;

    BandDiscriminator() = default;
    BandDiscriminator(long fft_size, long channels, long n_layers, Rng& rng) : fft(fft_size) {
        for (long b = 0; b < n_bands; ++b) {
            std::vector<Conv2dLayer> stack;
            long cin = 2;
            for (long i = 0; i < n_layers; ++i) {
                stack.emplace_back(cin, channels, 3, 9, rng, 1, 2, 1, 4);
                cin = channels;
            }
            band_convs.push_back(std::move(stack));
        }
        final = Conv2dLayer(channels, 1, 3, 3, rng, 1, 1, 1, 1);
    }

    DiscOutput forward(const Tensor& x) const {
        StftSpec spec{fft, fft / 4};
        check(x.dim(0) >= spec.win,
              "band discriminator: signal shorter than fft window " + std::to_string(fft));
        Tensor z = stft_complex(x, spec);  // [2, frames, bins]
        const long bins = z.dim(2);
        DiscOutput out;
        std::vector<Tensor> band_maps;
        for (long b = 0; b < n_bands; ++b) {
            const long lo = b * bins / n_bands;
            const long hi = b + 1 == n_bands ? bins : (b + 1) * bins / n_bands;
            Tensor h = slice_last(z, lo, hi);
            for (const auto& c : band_convs[(size_t)b]) {
                h = leaky_relu(c.forward(h), 0.1);
                out.features.push_back(h);
            }
            band_maps.push_back(h);
        }
        // stitch bands back together along the frequency axis
        Tensor joined = band_maps[0];
        for (size_t b = 1; b < band_maps.size(); ++b)
            joined = concat_last3(joined, band_maps[b]);
        out.logits = final.forward(joined);
        return out;
    }

    static Tensor concat_last3(const Tensor& a, const Tensor& b) {
        check(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) && a.dim(1) == b.dim(1),
              "band discriminator: concat shape mismatch");
        const long c = a.dim(0), h = a.dim(1), wa = a.dim(2), wb = b.dim(2);
        auto out = make_op_node({c, h, wa + wb}, {a.node(), b.node()});
        for (long i = 0; i < c * h; ++i) {
            std::copy(a.data() + i * wa, a.data() + (i + 1) * wa,
                      out->value.begin() + i * (wa + wb));
            std::copy(b.data() + i * wb, b.data() + (i + 1) * wb,
                      out->value.begin() + i * (wa + wb) + wa);
        }
        if (out->requires_grad) {
            Node* o = out.get();
            Node* an = a.node().get();
            Node* bn = b.node().get();
            out->backward = [o, an, bn, c, h, wa, wb] {
                for (long i = 0; i < c * h; ++i) {
                    if (an->requires_grad) {
                        an->ensure_grad();
                        for (long j = 0; j < wa; ++j)
                            an->grad[(size_t)(i * wa + j)] += o->grad[(size_t)(i * (wa + wb) + j)];
                    }
                    if (bn->requires_grad) {
                        bn->ensure_grad();
                        for (long j = 0; j < wb; ++j)
                            bn->grad[(size_t)(i * wb + j)] +=
                                o->grad[(size_t)(i * (wa + wb) + wa + j)];
                    }
                }
            };
        }
        return Tensor(out);
    }

    void collect(ParamMap& m, const std::string& p) const {
        for (size_t b = 0; b < band_convs.size(); ++b)
            for (size_t i = 0; i < band_convs[b].size(); ++i)
                band_convs[b][i].collect(
                    m, p + ".band" + std::to_string(b) + ".conv" + std::to_string(i));
        final.collect(m, p + ".final");
    }
};

}  // namespace disc_detail

// The full critic: one period probe per configured period plus one
// complex-spectrogram probe per FFT size.
struct Discriminator {
    std::vector<disc_detail::PeriodDiscriminator> periods;
    std::vector<disc_detail::BandDiscriminator> bands;

    Discriminator() = default;
    Discriminator(const DiscriminatorConfig& cfg, Rng& rng) {
        for (long p : cfg.periods)
            periods.emplace_back(p, cfg.channels, cfg.layers, rng);
        for (long f : cfg.band_ffts)
            bands.emplace_back(f, cfg.channels, std::max<long>(2, cfg.layers - 1), rng);
    }

    long count() const { return (long)(periods.size() + bands.size()); }

    std::vector<DiscOutput> forward(const Tensor& x) const {
        std::vector<DiscOutput> out;
        for (const auto& p : periods) out.push_back(p.forward(x));
        for (const auto& b : bands) out.push_back(b.forward(x));
        return out;
    }

    ParamMap parameters() const {
        ParamMap m;
        for (size_t i = 0; i < periods.size(); ++i)
            periods[i].collect(m, "disc.period" + std::to_string(i));
        for (size_t i = 0; i < bands.size(); ++i)
            bands[i].collect(m, "disc.band" + std::to_string(i));
        return m;
    }
};

}  // namespace hac
