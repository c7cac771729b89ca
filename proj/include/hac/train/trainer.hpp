#pragma once

#include <filesystem>
#include <iomanip>

#include "hac/codec/checkpoint.hpp"
#include "hac/train/dataset.hpp"
#include "hac/train/losses.hpp"

namespace hac {

struct TrainAbort : Error {
    explicit TrainAbort(const std::string& msg) : Error(msg) {}
};

struct StepLog {
    long step = 0;
    real lr = 0.0;
    std::vector<std::pair<std::string, real>> losses;  // fixed order per run
    std::vector<std::pair<std::string, real>> utilization;

    real loss(const std::string& name) const {
        for (const auto& [k, v] : losses)
            if (k == name) return v;
        throw Error("no logged loss named " + name);
    }
};

// One writer over model state: a discriminator update followed by a generator
// update per step, geometric learning-rate decay, EMA codebook maintenance,
// and an append-only CSV log.
class Trainer {
public:
    Trainer(const CodecConfig& model_cfg, const TrainConfig& train_cfg, std::uint64_t seed)
        : tcfg_(train_cfg), rng_(seed), init_rng_(seed ^ 0xC0FFEE) {
        tcfg_.validate();
        model_ = std::make_unique<CodecModel>(model_cfg, init_rng_);
        disc_ = Discriminator(tcfg_.disc, init_rng_);
        gen_opt_ = AdamW(trainable(model_->parameters()), tcfg_.beta1, tcfg_.beta2,
                         tcfg_.weight_decay);
        disc_opt_ = AdamW(trainable(disc_.parameters()), tcfg_.beta1, tcfg_.beta2,
                          tcfg_.weight_decay);
    }

    CodecModel& model() { return *model_; }
    const TrainConfig& train_config() const { return tcfg_; }
    long step() const { return step_; }
    real current_lr() const { return tcfg_.lr * std::pow(tcfg_.lr_gamma, (real)step_); }
    ParamMap discriminator_parameters() const { return disc_.parameters(); }

    bool adversarial_enabled() const {
        return tcfg_.weights.adversarial > 0.0 || tcfg_.weights.feature_match > 0.0;
    }

    StepLog train_step(const Dataset& ds) {
        const long factor = model_->downsample_factor();
        const long crop_samples = tcfg_.crop_samples(model_->config().sample_rate);
        const long crops = tcfg_.crops_per_step(model_->config().sample_rate);
        const real lr = current_lr();

        // generator forwards (one graph per crop, reused by both phases)
        std::vector<Dataset::Crop> batch;
        std::vector<ForwardOutput> outs;
        std::vector<Tensor> real_x;
        for (long c = 0; c < crops; ++c) {
            batch.push_back(ds.sample_crop(rng_, crop_samples, factor));
            const Dataset::Crop& crop = batch.back();
            TeacherBatch tb;
            if (crop.phonetic.rows > 0) tb.phonetic = &crop.phonetic;
            if (crop.lexical.rows > 0 && model_->config().has_lexical_branch()) {
                tb.lexical = &crop.lexical;
                tb.lexical_mask = &crop.lexical_mask;
            }
            outs.push_back(model_->forward(crop.audio, tb));
            real_x.push_back(Tensor::from_data({crop.audio.size()}, crop.audio.samples));
        }

        StepLog log;
        log.step = step_;
        log.lr = lr;

        // ---- discriminator update -------------------------------------
        if (adversarial_enabled()) {
            disc_opt_.zero_grad();
            Tensor d_loss;
            for (long c = 0; c < crops; ++c) {
                auto real_out = disc_.forward(real_x[(size_t)c]);
                auto fake_out = disc_.forward(detach(outs[(size_t)c].recon));
                Tensor term = gan_losses(real_out, fake_out).discriminator;
                d_loss = d_loss.defined() ? add(d_loss, term) : term;
            }
            d_loss = mul_scalar(d_loss, 1.0 / (real)crops);
            abort_on_nan("disc", d_loss.item());
            d_loss.backward();
            disc_opt_.step(lr);
            log.losses.emplace_back("disc", d_loss.item());
        }

        // ---- generator update ------------------------------------------
        gen_opt_.zero_grad();
        Tensor mel, adv, feat, cb, commit, kd_phn, kd_lex;
        bool any_kd_phn = false, any_kd_lex = false;
        for (long c = 0; c < crops; ++c) {
            ForwardOutput& out = outs[(size_t)c];
            Tensor mel_term = mel_reconstruction_loss(out.recon, real_x[(size_t)c], tcfg_.mel,
                                                      model_->config().sample_rate);
            mel = mel.defined() ? add(mel, mel_term) : mel_term;
            cb = cb.defined() ? add(cb, out.losses.at("codebook")) : out.losses.at("codebook");
            commit = commit.defined() ? add(commit, out.losses.at("commitment"))
                                      : out.losses.at("commitment");
            if (out.losses.count("kd_phn")) {
                kd_phn = kd_phn.defined() ? add(kd_phn, out.losses.at("kd_phn"))
                                          : out.losses.at("kd_phn");
                any_kd_phn = true;
            }
            if (out.losses.count("kd_lex")) {
                kd_lex = kd_lex.defined() ? add(kd_lex, out.losses.at("kd_lex"))
                                          : out.losses.at("kd_lex");
                any_kd_lex = true;
            }
            if (adversarial_enabled()) {
                auto real_out = disc_.forward(real_x[(size_t)c]);
                auto fake_out = disc_.forward(out.recon);
                GanLosses g = gan_losses(real_out, fake_out);
                adv = adv.defined() ? add(adv, g.generator_adv) : g.generator_adv;
                feat = feat.defined() ? add(feat, g.feature_match) : g.feature_match;
            }
        }
        const real inv = 1.0 / (real)crops;
        mel = mul_scalar(mel, inv);
        cb = mul_scalar(cb, inv);
        commit = mul_scalar(commit, inv);

        Tensor total = mul_scalar(mel, tcfg_.weights.mel);
        total = add(total, mul_scalar(cb, tcfg_.weights.codebook));
        total = add(total, mul_scalar(commit, tcfg_.weights.commitment));
        log.losses.emplace_back("mel", mel.item());
        if (adversarial_enabled()) {
            adv = mul_scalar(adv, inv);
            feat = mul_scalar(feat, inv);
            total = add(total, mul_scalar(adv, tcfg_.weights.adversarial));
            total = add(total, mul_scalar(feat, tcfg_.weights.feature_match));
            log.losses.emplace_back("adv", adv.item());
            log.losses.emplace_back("feat", feat.item());
        }
        log.losses.emplace_back("codebook", cb.item());
        log.losses.emplace_back("commitment", commit.item());
        if (any_kd_phn) {
            kd_phn = mul_scalar(kd_phn, inv);
            total = add(total, mul_scalar(kd_phn, tcfg_.weights.kd_phn));
            log.losses.emplace_back("kd_phn", kd_phn.item());
        }
        if (any_kd_lex) {
            kd_lex = mul_scalar(kd_lex, inv);
            total = add(total, mul_scalar(kd_lex, tcfg_.weights.kd_lex));
            log.losses.emplace_back("kd_lex", kd_lex.item());
        }
        for (const auto& [name, value] : log.losses) abort_on_nan(name, value);
        log.losses.emplace_back("total", total.item());
        abort_on_nan("total", total.item());

        total.backward();
        gen_opt_.step(lr);

        update_ema_codebooks(outs);
        log.utilization = batch_utilization(outs);

        ++step_;
        append_csv(log);
        return log;
    }

    // Runs `steps` more steps; writes ckpt_<step>.hack at the cadence and a
    // final checkpoint when done.
    StepLog train_loop(const Dataset& ds, long steps, long checkpoint_every,
                       const std::string& out_dir) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        open_csv(out_dir + "/train_log.csv");
        StepLog last;
        last.step = step_;
        last.lr = current_lr();
        for (long i = 0; i < steps; ++i) {
            last = train_step(ds);
            if (checkpoint_every > 0 && step_ % checkpoint_every == 0)
                save(out_dir + "/ckpt_" + std::to_string(step_) + ".hack");
        }
        if (steps > 0) save(out_dir + "/final.hack");
        return last;
    }

    void save(const std::string& path) const {
        ParamMap disc_params = disc_.parameters();
        save_checkpoint(path, *model_, (std::uint64_t)step_, &disc_params, &gen_opt_, &disc_opt_,
                        &rng_);
    }

    void resume(const std::string& path) {
        CheckpointMeta meta;
        std::unique_ptr<BinReader> r = load_checkpoint_into(path, *model_, &meta);
        check(meta.has_training, "checkpoint has no training state (inference export): " + path);
        ParamMap disc_params = disc_.parameters();
        ckpt_detail::read_named_tensors(*r, disc_params, "checkpoint " + path);
        gen_opt_.load(*r);
        disc_opt_.load(*r);
        rng_.load_state(r->str());
        step_ = (long)meta.step;
    }

private:
    void abort_on_nan(const std::string& term, real value) const {
        if (!std::isfinite(value))
            throw TrainAbort("non-finite loss: first bad term is '" + term + "' at step " +
                             std::to_string(step_));
    }

    void update_ema_codebooks(std::vector<ForwardOutput>& outs) {
        if (model_->config().quantizer_style != QuantizerStyle::ema) return;
        auto pool_and_update = [&](Codebook& cb, auto get_codes, auto get_inputs) {
            std::vector<long> codes;
            std::vector<real> values;
            long rows = 0;
            for (auto& out : outs) {
                const std::vector<long> c = get_codes(out);
                const Tensor t = get_inputs(out);
                codes.insert(codes.end(), c.begin(), c.end());
                values.insert(values.end(), t.values().begin(), t.values().end());
                rows += t.dim(0);
            }
            Tensor pooled = Tensor::from_data({rows, cb.code_dim}, std::move(values));
            ema_update(cb, codes, pooled, tcfg_.ema_decay);
            if ((step_ + 1) % tcfg_.ema_reinit_interval == 0)
                ema_reinit_stale(cb, pooled, rng_);
        };
        auto& acoustic = model_->acoustic_codebooks();
        for (size_t s = 0; s < acoustic.size(); ++s) {
            pool_and_update(
                acoustic[s],
                [s](ForwardOutput& o) {
                    std::vector<long> c((size_t)o.z.dim(0));
                    for (long i = 0; i < o.z.dim(0); ++i) c[(size_t)i] = o.qa.code_at(i, (long)s);
                    return c;
                },
                [s](ForwardOutput& o) { return o.qa.stage_inputs[s]; });
        }
        if (model_->phonetic_codebook())
            pool_and_update(
                *model_->phonetic_codebook(), [](ForwardOutput& o) { return o.qp.codes; },
                [](ForwardOutput& o) { return o.qp.stage_inputs[0]; });
        if (model_->lexical_codebook())
            pool_and_update(
                *model_->lexical_codebook(), [](ForwardOutput& o) { return o.ql.codes; },
                [](ForwardOutput& o) { return o.ql.stage_inputs[0]; });
    }

    std::vector<std::pair<std::string, real>> batch_utilization(
        const std::vector<ForwardOutput>& outs) const {
        std::vector<std::pair<std::string, real>> util;
        const std::vector<std::string> names = model_->layer_names();
        for (size_t l = 0; l < names.size(); ++l) {
            std::vector<long> codes;
            for (const auto& out : outs) {
                for (long f = 0; f < out.tokens.num_frames(); ++f)
                    codes.push_back(out.tokens.at(f, (long)l));
            }
            const long k = out_layer_size(names[l]);
            util.emplace_back("util_" + names[l], codebook_stats(codes, k).utilization);
        }
        return util;
    }

    long out_layer_size(const std::string& name) const {
        if (name == "lexical") return model_->config().lexical_codebook;
        if (name == "phonetic") return model_->config().phonetic_codebook;
        return model_->config().acoustic_codebook;
    }

    void open_csv(const std::string& path) {
        if (csv_path_ == path && csv_.is_open()) return;
        csv_path_ = path;
        const bool fresh = !std::filesystem::exists(path) || step_ == 0;
        csv_.open(path, fresh ? std::ios::trunc : std::ios::app);
        check(csv_.good(), "cannot open training log: " + path);
        csv_header_written_ = !fresh;
    }

    void append_csv(const StepLog& log) {
        if (!csv_.is_open()) return;
        if (!csv_header_written_) {
            csv_ << "step";
            for (const auto& [name, v] : log.losses) csv_ << "," << name;
            csv_ << ",lr";
            for (const auto& [name, v] : log.utilization) csv_ << "," << name;
            csv_ << "\n";
            csv_header_written_ = true;
        }
        csv_ << log.step;
        csv_ << std::setprecision(17);
        for (const auto& [name, v] : log.losses) csv_ << "," << v;
        csv_ << "," << log.lr;
        for (const auto& [name, v] : log.utilization) csv_ << "," << v;
        csv_ << "\n";
        csv_.flush();
    }

    TrainConfig tcfg_;
    Rng rng_;
    Rng init_rng_;
    std::unique_ptr<CodecModel> model_;
    Discriminator disc_;
    AdamW gen_opt_, disc_opt_;
    long step_ = 0;
    std::ofstream csv_;
    std::string csv_path_;
    bool csv_header_written_ = false;
};

}  // namespace hac
