#pragma once

#include "hac/codec/config.hpp"
#include "hac/nn/layers.hpp"

namespace hac {

struct QuantizerOutput {
    Tensor quantized;        // [F, D] after out-projection, straight-through path
    std::vector<long> codes; // F entries (single layer) or F*n_active stacked frame-major
    long active_layers = 1;
    Tensor codebook_loss;    // scalar
    Tensor commitment_loss;  // scalar
    Tensor residual;         // [F, D] residual after quantization (residual quantizer only)
    std::vector<Tensor> stage_quantized;  // per-stage [F, D] outputs (residual quantizer only)
    std::vector<Tensor> stage_inputs;     // what each stage quantized (EMA updates read these)

    long code_at(long frame, long layer) const {
        return codes[(size_t)(frame * active_layers + layer)];
    }
};

// One VQ stage: project_in -> nearest entry in lookup space -> project_out.
// With style==ema the projections are identity maps and the entries are
// updated by ema_update rather than by gradient.
struct Codebook {
    long size = 0;      // K
    long code_dim = 0;  // lookup dimensionality
    long embed_dim = 0; // D
    QuantizerStyle style = QuantizerStyle::low_dim_lookup;
    bool normalized_lookup = false;
    bool passthrough = false;  // test hook: bypass discretization, keep the projections

    Tensor entries;  // [K, code_dim]
    LinearLayer project_in;   // D -> code_dim (lookup style only)
    LinearLayer project_out;  // code_dim -> D (lookup style only)

    // EMA statistics (style == ema)
    std::vector<real> ema_counts;
    std::vector<real> ema_sums;      // K * code_dim
    std::vector<long> window_usage;  // assignments since the last reinit window
    std::vector<long> stale_windows; // consecutive windows with zero usage

    Codebook() = default;
    Codebook(long k, long cd, long d, QuantizerStyle st, Rng& rng, bool normalized = false)
        : size(k), code_dim(cd), embed_dim(d), style(st), normalized_lookup(normalized) {
        check(k >= 1 && cd >= 1 && d >= 1, "codebook: sizes must be positive");
        if (style == QuantizerStyle::ema)
            check(cd == d, "codebook: ema style requires code_dim == embed_dim");
        const bool trainable_entries = style == QuantizerStyle::low_dim_lookup;
        entries = init_normal({k, cd}, rng, 1.0 / std::sqrt((real)cd), trainable_entries);
        if (style == QuantizerStyle::low_dim_lookup) {
            project_in = LinearLayer(d, cd, rng);
            project_out = LinearLayer(cd, d, rng);
        }
        if (style == QuantizerStyle::ema) {
            ema_counts.assign((size_t)k, 0.0);
            ema_sums.assign((size_t)(k * cd), 0.0);
            window_usage.assign((size_t)k, 0);
            stale_windows.assign((size_t)k, 0);
        }
    }

    void collect(ParamMap& m, const std::string& p) const {
        add_param(m, p + ".entries", entries);
        if (style == QuantizerStyle::low_dim_lookup) {
            project_in.collect(m, p + ".project_in");
            project_out.collect(m, p + ".project_out");
        }
    }
};

// Nearest entry per row of e [F, code_dim], ties to the lowest index.
inline std::vector<long> nearest_codes(const Codebook& cb, const Tensor& e) {
    const long f = e.dim(0), cd = e.dim(1);
    check(cd == cb.code_dim, "nearest_codes: lookup dim mismatch");
    std::vector<long> codes((size_t)f);
    std::vector<real> norm_entries;
    const real* ent = cb.entries.data();
    if (cb.normalized_lookup) {
        norm_entries.resize((size_t)(cb.size * cd));
        for (long k = 0; k < cb.size; ++k) {
            real nrm = 0.0;
            for (long j = 0; j < cd; ++j) nrm += ent[k * cd + j] * ent[k * cd + j];
            nrm = std::sqrt(std::max(nrm, 1e-30));
            for (long j = 0; j < cd; ++j) norm_entries[(size_t)(k * cd + j)] = ent[k * cd + j] / nrm;
        }
        ent = norm_entries.data();
    }
    for (long i = 0; i < f; ++i) {
        const real* row = e.data() + i * cd;
        std::vector<real> norm_row;
        if (cb.normalized_lookup) {
            real nrm = 0.0;
            for (long j = 0; j < cd; ++j) nrm += row[j] * row[j];
            nrm = std::sqrt(std::max(nrm, 1e-30));
            norm_row.resize((size_t)cd);
            for (long j = 0; j < cd; ++j) norm_row[(size_t)j] = row[j] / nrm;
            row = norm_row.data();
        }
        long best = 0;
        real best_d = 1e300;
        for (long k = 0; k < cb.size; ++k) {
            real d = 0.0;
            for (long j = 0; j < cd; ++j) {
                const real diff = row[j] - ent[k * cd + j];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        codes[(size_t)i] = best;
    }
    return codes;
}

// Single-layer vector quantization with a straight-through gradient: the
// discretization backpropagates as the identity between the projections.
inline QuantizerOutput vq_forward(const Tensor& z, const Codebook& cb) {
    check(z.rank() == 2, "vq_forward: [F, D] input required");
    check(z.dim(1) == cb.embed_dim,
          "vq_forward: input dim " + std::to_string(z.dim(1)) + " != embed dim " +
              std::to_string(cb.embed_dim));
    QuantizerOutput out;
    const bool lookup = cb.style == QuantizerStyle::low_dim_lookup;
    Tensor e = lookup ? cb.project_in.forward(z) : z;
    if (cb.passthrough) {
        out.codes = nearest_codes(cb, detach(e));
        out.quantized = lookup ? cb.project_out.forward(e) : e;
        out.codebook_loss = Tensor::scalar(0.0);
        out.commitment_loss = Tensor::scalar(0.0);
        return out;
    }
    out.codes = nearest_codes(cb, e);
    out.stage_inputs.push_back(detach(e));
    Tensor picked = rows_select(cb.entries, out.codes);   // [F, code_dim]
    out.codebook_loss = cb.style == QuantizerStyle::ema
                            ? Tensor::scalar(0.0)
                            : mse_mean(detach(e), picked);
    out.commitment_loss = mse_mean(e, detach(picked));
    Tensor st = add(e, detach(sub(picked, e)));  // forward: picked; backward: identity
    out.quantized = lookup ? cb.project_out.forward(st) : st;
    return out;
}

// Residual quantization: each stage quantizes what the previous stages missed.
inline QuantizerOutput rvq_forward(const Tensor& z, const std::vector<Codebook>& codebooks,
                                   long n_active) {
    check(!codebooks.empty(), "rvq_forward: empty codebook list");
    check(n_active >= 1 && n_active <= (long)codebooks.size(),
          "rvq_forward: n_active out of range");
    const long f = z.dim(0);
    QuantizerOutput out;
    out.active_layers = n_active;
    out.codes.assign((size_t)(f * n_active), 0);
    Tensor residual = z;
    Tensor total, cb_loss, commit_loss;
    for (long s = 0; s < n_active; ++s) {
        QuantizerOutput stage = vq_forward(residual, codebooks[(size_t)s]);
        for (long i = 0; i < f; ++i)
            out.codes[(size_t)(i * n_active + s)] = stage.codes[(size_t)i];
        out.stage_quantized.push_back(stage.quantized);
        if (!stage.stage_inputs.empty()) out.stage_inputs.push_back(stage.stage_inputs[0]);
        total = total.defined() ? add(total, stage.quantized) : stage.quantized;
        cb_loss = cb_loss.defined() ? add(cb_loss, stage.codebook_loss) : stage.codebook_loss;
        commit_loss = commit_loss.defined() ? add(commit_loss, stage.commitment_loss)
                                            : stage.commitment_loss;
        residual = sub(residual, stage.quantized);
    }
    out.quantized = total;
    out.codebook_loss = cb_loss;
    out.commitment_loss = commit_loss;
    out.residual = residual;
    return out;
}

// Elementwise sum of whichever branch outputs are present.
inline Tensor fuse(const Tensor& z_qa, const Tensor& z_qp, const Tensor& z_ql) {
    Tensor out;
    for (const Tensor* t : {&z_qa, &z_qp, &z_ql}) {
        if (!t->defined()) continue;
        if (!out.defined()) out = *t;
        else {
            check(out.shape() == t->shape(), "fuse: operand shape mismatch " +
                                                 shape_str(out.shape()) + " vs " +
                                                 shape_str(t->shape()));
            out = add(out, *t);
        }
    }
    check(out.defined(), "fuse: no operands");
    return out;
}

// Standard EMA cluster update; entries with accumulated mass get the running
// mean of their assigned vectors.
inline void ema_update(Codebook& cb, const std::vector<long>& assignments,
                       const Tensor& embeddings, real decay) {
    check(cb.style == QuantizerStyle::ema, "ema_update: codebook is not ema style");
    check(embeddings.rank() == 2 && embeddings.dim(1) == cb.code_dim,
          "ema_update: embedding dim mismatch");
    check((long)assignments.size() == embeddings.dim(0), "ema_update: assignment count mismatch");
    const long cd = cb.code_dim;
    std::vector<real> batch_counts((size_t)cb.size, 0.0);
    std::vector<real> batch_sums((size_t)(cb.size * cd), 0.0);
    for (long i = 0; i < embeddings.dim(0); ++i) {
        const long k = assignments[(size_t)i];
        check(0 <= k && k < cb.size, "ema_update: assignment out of range");
        batch_counts[(size_t)k] += 1.0;
        for (long j = 0; j < cd; ++j)
            batch_sums[(size_t)(k * cd + j)] += embeddings.data()[i * cd + j];
        cb.window_usage[(size_t)k] += 1;
    }
    for (long k = 0; k < cb.size; ++k) {
        cb.ema_counts[(size_t)k] =
            decay * cb.ema_counts[(size_t)k] + (1.0 - decay) * batch_counts[(size_t)k];
        for (long j = 0; j < cd; ++j) {
            const size_t idx = (size_t)(k * cd + j);
            cb.ema_sums[idx] = decay * cb.ema_sums[idx] + (1.0 - decay) * batch_sums[idx];
        }
        if (cb.ema_counts[(size_t)k] > 1e-10) {
            for (long j = 0; j < cd; ++j)
                cb.entries.data()[k * cd + j] =
                    cb.ema_sums[(size_t)(k * cd + j)] / cb.ema_counts[(size_t)k];
        }
    }
}

// Closes a usage window: entries idle for two consecutive windows are reseeded
// from random batch vectors.
inline long ema_reinit_stale(Codebook& cb, const Tensor& batch_embeddings, Rng& rng) {
    check(cb.style == QuantizerStyle::ema, "ema_reinit_stale: codebook is not ema style");
    const long f = batch_embeddings.dim(0), cd = cb.code_dim;
    long reseeded = 0;
    for (long k = 0; k < cb.size; ++k) {
        if (cb.window_usage[(size_t)k] == 0) ++cb.stale_windows[(size_t)k];
        else cb.stale_windows[(size_t)k] = 0;
        if (cb.stale_windows[(size_t)k] >= 2) {
            const long pick = rng.uniform_int(f);
            for (long j = 0; j < cd; ++j)
                cb.entries.data()[k * cd + j] = batch_embeddings.data()[pick * cd + j];
            cb.ema_counts[(size_t)k] = 1.0;
            for (long j = 0; j < cd; ++j)
                cb.ema_sums[(size_t)(k * cd + j)] = cb.entries.data()[k * cd + j];
            cb.stale_windows[(size_t)k] = 0;
            ++reseeded;
        }
        cb.window_usage[(size_t)k] = 0;
    }
    return reseeded;
}

struct CodebookStats {
    real utilization = 0.0;  // distinct codes / K
    real perplexity = 0.0;   // exp(entropy of the empirical code distribution)
};

inline CodebookStats codebook_stats(const std::vector<long>& codes, long k) {
    check(k >= 1, "codebook_stats: K must be positive");
    CodebookStats s;
    if (codes.empty()) return s;
    std::vector<long> counts((size_t)k, 0);
    for (long c : codes) {
        check(0 <= c && c < k, "codebook_stats: code out of range");
        ++counts[(size_t)c];
    }
    long distinct = 0;
    real entropy = 0.0;
    const real n = (real)codes.size();
    for (long i = 0; i < k; ++i) {
        if (counts[(size_t)i] == 0) continue;
        ++distinct;
        const real p = (real)counts[(size_t)i] / n;
        entropy -= p * std::log(p);
    }
    s.utilization = (real)distinct / (real)k;
    s.perplexity = std::exp(entropy);
    return s;
}

}  // namespace hac
