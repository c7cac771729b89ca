#pragma once

#include <map>
#include <numeric>

#include "hac/audio/wav.hpp"
#include "hac/codec/decoder.hpp"
#include "hac/codec/quantizer.hpp"
#include "hac/data/tokens.hpp"
#include "hac/distill/kd_loss.hpp"
#include "hac/distill/teacher.hpp"

namespace hac {

// Frozen teacher targets for one clip, already at the codec frame rate.
struct TeacherBatch {
    const Mat* phonetic = nullptr;               // F x D'
    const Mat* lexical = nullptr;                // F x D''
    const std::vector<bool>* lexical_mask = nullptr;  // per-frame coverage
};

struct ForwardOutput {
    Tensor recon;                   // [T] reconstruction, tanh-bounded
    Tensor z, z_q;                  // [F, D] encoder output and fused bottleneck output
    Tensor z_qa, z_qp, z_ql;        // per-level quantized embeddings; absent => undefined
    TokenMatrix tokens;
    std::map<std::string, Tensor> losses;  // codebook, commitment, kd_phn, kd_lex
    QuantizerOutput qa, qp, ql;     // bottleneck internals (EMA updates, stats)

    Waveform reconstruction(long sample_rate) const {
        Waveform w;
        w.sample_rate = sample_rate;
        w.samples = recon.values();
        return w;
    }
};

// The codec: strided conv encoder, factorized bottleneck (residual acoustic
// quantizer plus factored phonetic/lexical branches), sum fusion, conv decoder.
class CodecModel {
public:
    CodecModel() = default;

    CodecModel(const CodecConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg_.validate();
        enc_ = Encoder(cfg_, rng);
        for (long i = 0; i < cfg_.acoustic_layers; ++i)
            acoustic_.emplace_back(cfg_.acoustic_codebook, cfg_.code_dim_acoustic, cfg_.embed_dim,
                                   cfg_.quantizer_style, rng, cfg_.normalized_lookup);
        if (cfg_.has_phonetic_branch()) {
            if (cfg_.branch_transformer_phonetic)
                trf_p_ = std::make_unique<BranchEncoder>(cfg_.embed_dim, cfg_.transformer, rng);
            vq_p_ = std::make_unique<Codebook>(cfg_.phonetic_codebook, cfg_.code_dim_phonetic,
                                               cfg_.embed_dim, cfg_.quantizer_style, rng,
                                               cfg_.normalized_lookup);
        }
        if (cfg_.has_lexical_branch()) {
            if (cfg_.branch_transformer_lexical)
                trf_l_ = std::make_unique<BranchEncoder>(cfg_.embed_dim, cfg_.transformer, rng);
            vq_l_ = std::make_unique<Codebook>(cfg_.lexical_codebook, cfg_.code_dim_lexical,
                                               cfg_.embed_dim, cfg_.quantizer_style, rng,
                                               cfg_.normalized_lookup);
        }
        dec_ = Decoder(cfg_, rng);
        proj_phonetic_ = init_normal({cfg_.embed_dim, cfg_.kd_phonetic_dim}, rng,
                                     1.0 / std::sqrt((real)cfg_.embed_dim));
        if (cfg_.has_lexical_branch())
            proj_lexical_ = init_normal({cfg_.embed_dim, cfg_.kd_lexical_dim}, rng,
                                        1.0 / std::sqrt((real)cfg_.embed_dim));
    }

    const CodecConfig& config() const { return cfg_; }
    long downsample_factor() const { return cfg_.downsample_factor(); }

    long num_frames_for(long samples) const { return samples / downsample_factor(); }

    // [F, D] encoder output for a waveform at the configured rate;
    // trailing samples beyond a whole frame are dropped.
    Tensor encode(const Waveform& x) const {
        check(x.sample_rate == cfg_.sample_rate,
              "model: waveform rate " + std::to_string(x.sample_rate) +
                  " does not match config rate " + std::to_string(cfg_.sample_rate));
        const long factor = downsample_factor();
        check(x.size() >= factor, "model: input shorter than one frame (" +
                                      std::to_string(x.size()) + " < " + std::to_string(factor) +
                                      " samples)");
        const long t = (x.size() / factor) * factor;
        std::vector<real> clipped(x.samples.begin(), x.samples.begin() + t);
        Tensor xt = Tensor::from_data({1, t}, std::move(clipped));
        return transpose2d(enc_.forward(xt));
    }

    Tensor branch_encode(const Tensor& z, TeacherRole which) const {
        if (which == TeacherRole::phonetic) {
            check(cfg_.has_phonetic_branch(), "model: no phonetic branch in this configuration");
            return trf_p_ ? trf_p_->forward(z) : z;
        }
        check(cfg_.has_lexical_branch(), "model: no lexical branch in this configuration");
        return trf_l_ ? trf_l_->forward(z) : z;
    }

    Tensor decode_embeddings(const Tensor& z_q) const {
        Tensor wave = dec_.forward(transpose2d(z_q));  // [1, T]
        return reshape(wave, {wave.dim(1)});
    }

    ForwardOutput forward(const Waveform& x, const TeacherBatch& teachers = {},
                          long n_active_acoustic = 0) const {
        ForwardOutput out;
        out.z = encode(x);
        const long f = out.z.dim(0);
        const long n_active =
            n_active_acoustic > 0 ? n_active_acoustic : cfg_.acoustic_layers;

        QuantizerOutput qa = rvq_forward(out.z, acoustic_, n_active);
        out.z_qa = qa.quantized;
        Tensor cb_loss = qa.codebook_loss;
        Tensor commit_loss = qa.commitment_loss;

        QuantizerOutput qp, ql;
        if (cfg_.has_phonetic_branch()) {
            qp = vq_forward(branch_encode(out.z, TeacherRole::phonetic), *vq_p_);
            out.z_qp = qp.quantized;
            cb_loss = add(cb_loss, qp.codebook_loss);
            commit_loss = add(commit_loss, qp.commitment_loss);
        }
        if (cfg_.has_lexical_branch()) {
            ql = vq_forward(branch_encode(out.z, TeacherRole::lexical), *vq_l_);
            out.z_ql = ql.quantized;
            cb_loss = add(cb_loss, ql.codebook_loss);
            commit_loss = add(commit_loss, ql.commitment_loss);
        }

        out.z_q = fuse(out.z_qa, out.z_qp, out.z_ql);
        out.recon = decode_embeddings(out.z_q);
        out.losses["codebook"] = cb_loss;
        out.losses["commitment"] = commit_loss;

        if (teachers.phonetic != nullptr) {
            Tensor student = kd_phonetic_student(qa, qp);
            check(teachers.phonetic->rows == f,
                  "model: phonetic teacher rows " + std::to_string(teachers.phonetic->rows) +
                      " != frames " + std::to_string(f));
            out.losses["kd_phn"] =
                kd_cosine_loss(student, proj_phonetic_, *teachers.phonetic);
        }
        if (teachers.lexical != nullptr) {
            check(cfg_.has_lexical_branch(), "model: lexical teacher without a lexical branch");
            check(teachers.lexical->rows == f,
                  "model: lexical teacher rows " + std::to_string(teachers.lexical->rows) +
                      " != frames " + std::to_string(f));
            out.losses["kd_lex"] = kd_cosine_loss(
                ql.quantized, proj_lexical_, *teachers.lexical,
                teachers.lexical_mask ? *teachers.lexical_mask : std::vector<bool>{});
        }

        out.tokens = assemble_tokens(f, qa, qp, ql, n_active);
        out.qa = qa;
        out.qp = qp;
        out.ql = ql;
        return out;
    }

    // Encoder + bottleneck only; used by the token encoder and evaluation.
    struct Analysis {
        Tensor z;
        QuantizerOutput acoustic;
        QuantizerOutput phonetic;  // valid iff config has the branch
        QuantizerOutput lexical;
        TokenMatrix tokens;
    };

    Analysis analyze(const Waveform& x) const {
        Analysis a;
        a.z = encode(x);
        a.acoustic = rvq_forward(a.z, acoustic_, cfg_.acoustic_layers);
        if (cfg_.has_phonetic_branch())
            a.phonetic = vq_forward(branch_encode(a.z, TeacherRole::phonetic), *vq_p_);
        if (cfg_.has_lexical_branch())
            a.lexical = vq_forward(branch_encode(a.z, TeacherRole::lexical), *vq_l_);
        a.tokens = assemble_tokens(a.z.dim(0), a.acoustic, a.phonetic, a.lexical,
                                   cfg_.acoustic_layers);
        return a;
    }

    TokenMatrix encode_tokens(const Waveform& x) const { return analyze(x).tokens; }

    // Tokens -> waveform. The layer table must match this model's bottleneck.
    Waveform decode_tokens(const TokenMatrix& tokens) const {
        tokens.validate();
        const TokenMatrix expect = token_layout(1);
        check(tokens.num_layers() == expect.num_layers(),
              "decode: token file has " + std::to_string(tokens.num_layers()) +
                  " layers, model expects " + std::to_string(expect.num_layers()));
        for (long l = 0; l < expect.num_layers(); ++l) {
            check(tokens.layers[(size_t)l].name == expect.layers[(size_t)l].name,
                  "decode: layer " + std::to_string(l) + " is '" +
                      tokens.layers[(size_t)l].name + "', model expects '" +
                      expect.layers[(size_t)l].name + "'");
            check(tokens.layers[(size_t)l].codebook_size == expect.layers[(size_t)l].codebook_size,
                  "decode: codebook size mismatch in layer " + tokens.layers[(size_t)l].name +
                      " (file " + std::to_string(tokens.layers[(size_t)l].codebook_size) +
                      ", model " + std::to_string(expect.layers[(size_t)l].codebook_size) + ")");
        }
        const long f = tokens.num_frames();
        long col = 0;
        Tensor z_ql, z_qp;
        if (cfg_.has_lexical_branch()) z_ql = embed_layer(tokens, col++, *vq_l_, f);
        if (cfg_.has_phonetic_branch()) z_qp = embed_layer(tokens, col++, *vq_p_, f);
        Tensor z_qa;
        for (long s = 0; s < cfg_.acoustic_layers; ++s) {
            Tensor q = embed_layer(tokens, col++, acoustic_[(size_t)s], f);
            z_qa = z_qa.defined() ? add(z_qa, q) : q;
        }
        Tensor z_q = fuse(z_qa, z_qp, z_ql);
        Tensor wave = decode_embeddings(z_q);
        Waveform out;
        out.sample_rate = cfg_.sample_rate;
        out.samples = wave.values();
        return out;
    }

    // Lookup-space codebook vectors per frame for one token layer, used as
    // evaluation features.
    Mat layer_embeddings(const TokenMatrix& tokens, const std::string& layer_name) const {
        const std::vector<long> codes = layer_codes(tokens, layer_name);
        const Codebook& cb = codebook_for(layer_name);
        Mat out((long)codes.size(), cb.code_dim);
        for (size_t i = 0; i < codes.size(); ++i)
            std::copy(cb.entries.data() + codes[i] * cb.code_dim,
                      cb.entries.data() + (codes[i] + 1) * cb.code_dim, out.row((long)i));
        return out;
    }

    const Codebook& codebook_for(const std::string& layer_name) const {
        if (layer_name == "lexical") {
            check(vq_l_ != nullptr, "no lexical codebook in this configuration");
            return *vq_l_;
        }
        if (layer_name == "phonetic") {
            check(vq_p_ != nullptr, "no phonetic codebook in this configuration");
            return *vq_p_;
        }
        check(layer_name.rfind("acoustic_", 0) == 0, "unknown layer name: " + layer_name);
        const long idx = std::stol(layer_name.substr(9)) - 1;
        check(0 <= idx && idx < (long)acoustic_.size(), "unknown layer name: " + layer_name);
        return acoustic_[(size_t)idx];
    }

    std::vector<std::string> layer_names() const {
        std::vector<std::string> names;
        if (cfg_.has_lexical_branch()) names.push_back("lexical");
        if (cfg_.has_phonetic_branch()) names.push_back("phonetic");
        for (long i = 1; i <= cfg_.acoustic_layers; ++i)
            names.push_back("acoustic_" + std::to_string(i));
        return names;
    }

    ParamMap parameters() const {
        ParamMap m;
        enc_.collect(m, "enc");
        for (size_t i = 0; i < acoustic_.size(); ++i)
            acoustic_[i].collect(m, "acoustic" + std::to_string(i));
        if (trf_p_) trf_p_->collect(m, "trf_p");
        if (vq_p_) vq_p_->collect(m, "vq_p");
        if (trf_l_) trf_l_->collect(m, "trf_l");
        if (vq_l_) vq_l_->collect(m, "vq_l");
        dec_.collect(m, "dec");
        add_param(m, "kd.proj_phonetic", proj_phonetic_);
        if (proj_lexical_.defined()) add_param(m, "kd.proj_lexical", proj_lexical_);
        return m;
    }

    // EMA statistics and reinit counters, serialized alongside parameters.
    std::vector<std::pair<std::string, std::vector<real>>> aux_state() const {
        std::vector<std::pair<std::string, std::vector<real>>> out;
        auto dump = [&out](const Codebook& cb, const std::string& p) {
            if (cb.style != QuantizerStyle::ema) return;
            out.emplace_back(p + ".ema_counts", cb.ema_counts);
            out.emplace_back(p + ".ema_sums", cb.ema_sums);
            std::vector<real> usage(cb.window_usage.begin(), cb.window_usage.end());
            std::vector<real> stale(cb.stale_windows.begin(), cb.stale_windows.end());
            out.emplace_back(p + ".window_usage", usage);
            out.emplace_back(p + ".stale_windows", stale);
        };
        for (size_t i = 0; i < acoustic_.size(); ++i)
            dump(acoustic_[i], "acoustic" + std::to_string(i));
        if (vq_p_) dump(*vq_p_, "vq_p");
        if (vq_l_) dump(*vq_l_, "vq_l");
        return out;
    }

    void load_aux_state(const std::vector<std::pair<std::string, std::vector<real>>>& state) {
        auto fill = [&state](Codebook& cb, const std::string& p) {
            if (cb.style != QuantizerStyle::ema) return;
            for (const auto& [name, v] : state) {
                if (name == p + ".ema_counts") cb.ema_counts = v;
                else if (name == p + ".ema_sums") cb.ema_sums = v;
                else if (name == p + ".window_usage")
                    cb.window_usage.assign(v.begin(), v.end());
                else if (name == p + ".stale_windows")
                    cb.stale_windows.assign(v.begin(), v.end());
            }
        };
        for (size_t i = 0; i < acoustic_.size(); ++i)
            fill(acoustic_[i], "acoustic" + std::to_string(i));
        if (vq_p_) fill(*vq_p_, "vq_p");
        if (vq_l_) fill(*vq_l_, "vq_l");
    }

    std::vector<Codebook>& acoustic_codebooks() { return acoustic_; }
    Codebook* phonetic_codebook() { return vq_p_.get(); }
    Codebook* lexical_codebook() { return vq_l_.get(); }
    const Tensor& phonetic_projection() const { return proj_phonetic_; }
    const Tensor& lexical_projection() const { return proj_lexical_; }

    // Test hook: bypass every discretization (see the quantizer contract).
    void set_passthrough(bool on) {
        for (auto& cb : acoustic_) cb.passthrough = on;
        if (vq_p_) vq_p_->passthrough = on;
        if (vq_l_) vq_l_->passthrough = on;
    }
    void set_positional_enabled(bool on) {
        if (trf_p_) trf_p_->cfg.use_positional = on;
        if (trf_l_) trf_l_->cfg.use_positional = on;
    }

    TokenMatrix token_layout(long frames) const {
        TokenMatrix t;
        const long g = std::gcd((long)cfg_.sample_rate, downsample_factor());
        t.set_frame_rate(cfg_.sample_rate / g, downsample_factor() / g);
        if (cfg_.has_lexical_branch()) t.layers.push_back({"lexical", cfg_.lexical_codebook});
        if (cfg_.has_phonetic_branch()) t.layers.push_back({"phonetic", cfg_.phonetic_codebook});
        for (long i = 1; i <= cfg_.acoustic_layers; ++i)
            t.layers.push_back({"acoustic_" + std::to_string(i), cfg_.acoustic_codebook});
        t.codes.assign((size_t)(frames * t.num_layers()), 0);
        return t;
    }

private:
    Tensor kd_phonetic_student(const QuantizerOutput& qa, const QuantizerOutput& qp) const {
        if (cfg_.has_phonetic_branch()) return qp.quantized;
        check(cfg_.kd_rvq_layer <= (long)qa.stage_quantized.size(),
              "model: distillation stage dropped by quantizer dropout");
        return qa.stage_quantized[(size_t)(cfg_.kd_rvq_layer - 1)];
    }

    static Tensor embed_layer(const TokenMatrix& tokens, long col, const Codebook& cb, long f) {
        std::vector<long> codes((size_t)f);
        for (long i = 0; i < f; ++i) codes[(size_t)i] = tokens.at(i, col);
        Tensor picked = rows_select(cb.entries, codes);
        return cb.style == QuantizerStyle::low_dim_lookup ? cb.project_out.forward(picked)
                                                          : picked;
    }

    TokenMatrix assemble_tokens(long f, const QuantizerOutput& qa, const QuantizerOutput& qp,
                                const QuantizerOutput& ql, long n_active) const {
        TokenMatrix t = token_layout(f);
        for (long i = 0; i < f; ++i) {
            long col = 0;
            if (cfg_.has_lexical_branch()) t.at(i, col++) = ql.codes[(size_t)i];
            if (cfg_.has_phonetic_branch()) t.at(i, col++) = qp.codes[(size_t)i];
            for (long s = 0; s < cfg_.acoustic_layers; ++s)
                t.at(i, col++) = s < n_active ? qa.code_at(i, s) : 0;
        }
        return t;
    }

    CodecConfig cfg_;
    Encoder enc_;
    Decoder dec_;
    std::vector<Codebook> acoustic_;
    std::unique_ptr<BranchEncoder> trf_p_, trf_l_;
    std::unique_ptr<Codebook> vq_p_, vq_l_;
    Tensor proj_phonetic_, proj_lexical_;
};

}  // namespace hac
