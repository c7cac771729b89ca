#pragma once

#include <map>
#include <sstream>

#include "hac/audio/fft.hpp"
#include "hac/nn/transformer.hpp"

namespace hac {

enum class Branches { none, phonetic_only, phonetic_lexical };
enum class QuantizerStyle { low_dim_lookup, ema };

inline std::string branches_name(Branches b) {
    switch (b) {
        case Branches::none: return "none";
        case Branches::phonetic_only: return "phonetic_only";
        case Branches::phonetic_lexical: return "phonetic_lexical";
    }
    return "?";
}

inline Branches branches_from(const std::string& s) {
    if (s == "none") return Branches::none;
    if (s == "phonetic_only") return Branches::phonetic_only;
    if (s == "phonetic_lexical") return Branches::phonetic_lexical;
    throw Error("unknown branches value: " + s);
}

inline std::string quantizer_style_name(QuantizerStyle q) {
    return q == QuantizerStyle::ema ? "ema" : "low_dim_lookup";
}

inline QuantizerStyle quantizer_style_from(const std::string& s) {
    if (s == "ema") return QuantizerStyle::ema;
    if (s == "low_dim_lookup") return QuantizerStyle::low_dim_lookup;
    throw Error("unknown quantizer_style value: " + s);
}

// Model topology and capacity. Everything the encoder, bottleneck, branches
// and decoder need to be rebuilt exactly.
struct CodecConfig {
    std::string name = "custom";
    long sample_rate = 16000;
    std::vector<long> encoder_strides = {2, 4, 5, 8};

    long embed_dim = 1024;  // D, frame embedding width

    // acoustic residual quantizer
    long acoustic_layers = 7;      // N
    long acoustic_codebook = 1024; // A
    long code_dim_acoustic = 8;

    // factored branch quantizers
    long phonetic_codebook = 16384;
    long lexical_codebook = 16384;
    long code_dim_phonetic = 128;
    long code_dim_lexical = 128;

    Branches branches = Branches::phonetic_lexical;
    QuantizerStyle quantizer_style = QuantizerStyle::low_dim_lookup;
    bool normalized_lookup = false;
    bool quantizer_dropout = false;

    bool branch_transformer_phonetic = true;
    bool branch_transformer_lexical = true;
    TransformerConfig transformer;

    // conv stack widths; encoder_channels[i] is the rate before stride i,
    // decoder_channels runs the opposite direction
    std::vector<long> encoder_channels = {64, 128, 256, 512, 1024};
    std::vector<long> decoder_channels = {1024, 512, 256, 128, 64};
    long residual_units = 2;

    // distillation targets
    long kd_phonetic_dim = 768;  // D'
    long kd_lexical_dim = 768;   // D''
    long kd_rvq_layer = 0;       // 0: branch student; >=1: RVQ stage index (1-based)

    long downsample_factor() const {
        long f = 1;
        for (long s : encoder_strides) f *= s;
        return f;
    }

    real frame_rate() const { return (real)sample_rate / (real)downsample_factor(); }

    bool has_phonetic_branch() const { return branches != Branches::none; }
    bool has_lexical_branch() const { return branches == Branches::phonetic_lexical; }

    long tokens_per_frame() const {
        return acoustic_layers + (has_phonetic_branch() ? 1 : 0) + (has_lexical_branch() ? 1 : 0);
    }

    long bits_per_frame() const {
        auto bits = [](long k) {
            long b = 0;
            while ((1L << b) < k) ++b;
            return b;
        };
        long total = acoustic_layers * bits(acoustic_codebook);
        if (has_phonetic_branch()) total += bits(phonetic_codebook);
        if (has_lexical_branch()) total += bits(lexical_codebook);
        return total;
    }

    void validate() const {
        check(sample_rate > 0, "config: sample_rate must be positive");
        check(!encoder_strides.empty(), "config: encoder_strides empty");
        for (long s : encoder_strides) check(s >= 1, "config: stride must be >= 1");
        check(embed_dim >= 1, "config: embed_dim must be >= 1");
        check(acoustic_layers >= 1, "config: acoustic_layers must be >= 1");
        check(acoustic_codebook >= 1 && phonetic_codebook >= 1 && lexical_codebook >= 1,
              "config: codebook sizes must be >= 1");
        check(code_dim_acoustic >= 1 && code_dim_phonetic >= 1 && code_dim_lexical >= 1,
              "config: code dims must be >= 1");
        check(encoder_channels.size() == encoder_strides.size() + 1,
              "config: encoder_channels must list strides+1 widths");
        check(decoder_channels.size() == encoder_strides.size() + 1,
              "config: decoder_channels must list strides+1 widths");
        check(residual_units >= 1, "config: residual_units must be >= 1");
        check(kd_rvq_layer >= 0 && kd_rvq_layer <= acoustic_layers,
              "config: kd_rvq_layer out of range");
        if (branches == Branches::none)
            check(kd_rvq_layer >= 1,
                  "config: branches=none requires the distillation student inside the "
                  "residual quantizer (kd_rvq_layer >= 1)");
        else
            check(kd_rvq_layer == 0,
                  "config: kd_rvq_layer only applies when branches=none");
        if (quantizer_style == QuantizerStyle::ema) {
            check(code_dim_acoustic == embed_dim,
                  "config: ema quantizers use identity projections (code_dim == embed_dim)");
        }
        check(kd_phonetic_dim >= 1 && kd_lexical_dim >= 1, "config: teacher dims must be >= 1");
        transformer.validate();
    }
};

struct LossWeights {
    real mel = 15.0;
    real adversarial = 1.0;
    real feature_match = 2.0;
    real codebook = 1.0;
    real commitment = 0.25;
    real kd_phn = 1.0;
    real kd_lex = 1.0;

    void validate() const {
        for (real v : {mel, adversarial, feature_match, codebook, commitment, kd_phn, kd_lex})
            check(v >= 0.0 && std::isfinite(v), "loss weights must be finite and >= 0");
    }
};

struct DiscriminatorConfig {
    std::vector<long> periods = {2, 3, 5, 7, 11};
    std::vector<long> band_ffts = {2048, 1024, 512};
    long channels = 32;
    long layers = 4;
};

struct MelLossConfig {
    std::vector<long> windows = {32, 64, 128, 256, 512, 1024, 2048};
    std::vector<long> mels = {5, 10, 20, 40, 80, 160, 320};
    real floor_val = 1e-5;

    void validate() const {
        check(!windows.empty() && windows.size() == mels.size(),
              "mel loss: windows and mel counts must pair up");
        for (size_t i = 0; i < windows.size(); ++i) {
            check(is_pow2(windows[i]), "mel loss: window sizes must be powers of two");
            check(mels[i] >= 1 && mels[i] <= windows[i] / 2 + 1, "mel loss: mel count out of range");
        }
    }
};

struct TrainConfig {
    real lr = 1e-4;
    real beta1 = 0.8;
    real beta2 = 0.9;
    real weight_decay = 0.0;
    real lr_gamma = 0.999996;  // per-step decay
    real crop_seconds = 3.8;
    real batch_seconds = 60.0;
    LossWeights weights;
    DiscriminatorConfig disc;
    MelLossConfig mel;
    real ema_decay = 0.99;
    long ema_reinit_interval = 200;  // steps per usage window
    real commit_beta_unused = 0.0;   // reserved

    long crops_per_step(long sample_rate) const {
        (void)sample_rate;
        const long n = (long)std::floor(batch_seconds / crop_seconds);
        return std::max<long>(1, n);
    }
    long crop_samples(long sample_rate) const {
        return (long)std::llround(crop_seconds * (real)sample_rate);
    }

    void validate() const {
        check(lr > 0 && std::isfinite(lr), "train: lr must be positive");
        check(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "train: betas must be in [0,1)");
        check(lr_gamma > 0 && lr_gamma <= 1.0, "train: lr_gamma must be in (0,1]");
        check(crop_seconds > 0, "train: crop_seconds must be positive");
        check(batch_seconds > 0, "train: batch_seconds must be positive");
        check(ema_decay >= 0 && ema_decay <= 1, "train: ema_decay must be in [0,1]");
        check(ema_reinit_interval >= 1, "train: ema_reinit_interval must be >= 1");
        weights.validate();
        mel.validate();
        check(!disc.periods.empty() || !disc.band_ffts.empty(),
              "train: discriminator needs at least one sub-discriminator");
        for (long f : disc.band_ffts) check(is_pow2(f), "train: band fft sizes must be powers of two");
    }
};

struct Preset {
    CodecConfig model;
    TrainConfig train;
};

// ---- preset registry -------------------------------------------------------

namespace preset_detail {

inline Preset base_full() {
    Preset p;
    p.model.sample_rate = 16000;
    p.model.encoder_strides = {2, 4, 5, 8};
    p.model.embed_dim = 1024;
    p.model.encoder_channels = {64, 128, 256, 512, 1024};
    p.model.decoder_channels = {1024, 512, 256, 128, 64};
    p.model.residual_units = 3;
    p.model.transformer = TransformerConfig{4, 8, 768, 3072, 15, 16, true};
    p.model.kd_phonetic_dim = 768;
    p.model.kd_lexical_dim = 768;
    return p;
}

// Desk-scale twin: 8 kHz, x160, small widths, short crops.
inline Preset base_toy() {
    Preset p;
    p.model.sample_rate = 8000;
    p.model.encoder_strides = {5, 4, 4, 2};
    p.model.embed_dim = 40;
    p.model.encoder_channels = {8, 12, 16, 24, 32};
    p.model.decoder_channels = {32, 24, 16, 12, 8};
    p.model.residual_units = 1;
    p.model.transformer = TransformerConfig{2, 4, 64, 128, 9, 4, true};
    p.model.kd_phonetic_dim = 9;
    p.model.kd_lexical_dim = 16;
    p.train.lr = 1e-3;
    p.train.crop_seconds = 0.96;
    p.train.batch_seconds = 0.96;
    p.train.weights.kd_phn = 3.0;
    p.train.weights.kd_lex = 3.0;
    p.train.disc.periods = {2, 3};
    p.train.disc.band_ffts = {256};
    p.train.disc.channels = 8;
    p.train.disc.layers = 3;
    p.train.mel.windows = {512, 128, 32};
    p.train.mel.mels = {40, 10, 5};
    p.train.ema_reinit_interval = 100;
    return p;
}

inline void apply_st(Preset& p, bool toy) {
    p.model.branches = Branches::none;
    p.model.quantizer_style = QuantizerStyle::ema;
    p.model.acoustic_layers = 9;
    p.model.kd_rvq_layer = 1;
    if (toy) {
        p.model.acoustic_codebook = 64;
        p.model.code_dim_acoustic = p.model.embed_dim;
    } else {
        p.model.acoustic_codebook = 1024;
        p.model.code_dim_acoustic = p.model.embed_dim;
    }
}

inline void apply_dac(Preset& p, bool toy, bool phonetic_14bit, bool with_transformer) {
    p.model.branches = Branches::phonetic_only;
    p.model.quantizer_style = QuantizerStyle::low_dim_lookup;
    p.model.acoustic_layers = 8;
    p.model.branch_transformer_phonetic = with_transformer;
    if (toy) {
        p.model.acoustic_codebook = 64;
        p.model.code_dim_acoustic = 4;
        p.model.phonetic_codebook = phonetic_14bit ? 128 : 64;
        p.model.code_dim_phonetic = 16;
    } else {
        p.model.acoustic_codebook = 1024;
        p.model.code_dim_acoustic = 8;
        p.model.phonetic_codebook = phonetic_14bit ? 16384 : 1024;
        p.model.code_dim_phonetic = 128;
    }
}

inline void apply_hac(Preset& p, bool toy) {
    p.model.branches = Branches::phonetic_lexical;
    p.model.quantizer_style = QuantizerStyle::low_dim_lookup;
    p.model.acoustic_layers = toy ? 2 : 7;
    p.model.branch_transformer_phonetic = true;
    p.model.branch_transformer_lexical = true;
    if (toy) {
        p.model.acoustic_codebook = 64;
        p.model.code_dim_acoustic = 4;
        p.model.phonetic_codebook = 64;
        p.model.lexical_codebook = 64;
        p.model.code_dim_phonetic = 16;
        p.model.code_dim_lexical = 16;
    } else {
        p.model.acoustic_codebook = 1024;
        p.model.code_dim_acoustic = 8;
        p.model.phonetic_codebook = 16384;
        p.model.lexical_codebook = 16384;
        p.model.code_dim_phonetic = 128;
        p.model.code_dim_lexical = 128;
    }
}

}  // namespace preset_detail

inline std::vector<std::string> preset_names() {
    return {"st-10",      "dac-10",      "dac-14",      "dac-14-t",      "hac-14",
            "st-10-toy",  "dac-10-toy",  "dac-14-toy",  "dac-14-t-toy",  "hac-14-toy"};
}

inline Preset make_preset(const std::string& name_in) {
    using namespace preset_detail;
    std::string name = name_in;
    // short aliases for the desk twins
    if (name == "st-toy") name = "st-10-toy";
    if (name == "dac-toy") name = "dac-10-toy";
    if (name == "dac-t-toy") name = "dac-14-t-toy";
    if (name == "hac-toy") name = "hac-14-toy";

    const bool toy = name.size() > 4 && name.substr(name.size() - 4) == "-toy";
    const std::string stem = toy ? name.substr(0, name.size() - 4) : name;
    Preset p = toy ? base_toy() : base_full();
    if (stem == "st-10") apply_st(p, toy);
    else if (stem == "dac-10") apply_dac(p, toy, false, false);
    else if (stem == "dac-14") apply_dac(p, toy, true, false);
    else if (stem == "dac-14-t") apply_dac(p, toy, true, true);
    else if (stem == "hac-14") apply_hac(p, toy);
    else throw Error("unknown preset: " + name_in);
    p.model.name = name;
    p.model.validate();
    p.train.validate();
    return p;
}

// ---- flat key/value serialization (config files, checkpoints) ---------------

namespace kv_detail {

inline std::string join_longs(const std::vector<long>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<long> split_longs(const std::string& s) {
    std::vector<long> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) {
        check(!cur.empty(), "bad integer list: " + s);
        out.push_back(std::stol(cur));
    }
    return out;
}

inline std::string fmt_real(real v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace kv_detail

inline std::map<std::string, std::string> codec_config_to_kv(const CodecConfig& c) {
    using namespace kv_detail;
    std::map<std::string, std::string> m;
    m["model.name"] = c.name;
    m["model.sample_rate"] = std::to_string(c.sample_rate);
    m["model.encoder_strides"] = join_longs(c.encoder_strides);
    m["model.embed_dim"] = std::to_string(c.embed_dim);
    m["model.acoustic_layers"] = std::to_string(c.acoustic_layers);
    m["model.acoustic_codebook"] = std::to_string(c.acoustic_codebook);
    m["model.code_dim_acoustic"] = std::to_string(c.code_dim_acoustic);
    m["model.phonetic_codebook"] = std::to_string(c.phonetic_codebook);
    m["model.lexical_codebook"] = std::to_string(c.lexical_codebook);
    m["model.code_dim_phonetic"] = std::to_string(c.code_dim_phonetic);
    m["model.code_dim_lexical"] = std::to_string(c.code_dim_lexical);
    m["model.branches"] = branches_name(c.branches);
    m["model.quantizer_style"] = quantizer_style_name(c.quantizer_style);
    m["model.normalized_lookup"] = c.normalized_lookup ? "true" : "false";
    m["model.quantizer_dropout"] = c.quantizer_dropout ? "true" : "false";
    m["model.branch_transformer_phonetic"] = c.branch_transformer_phonetic ? "true" : "false";
    m["model.branch_transformer_lexical"] = c.branch_transformer_lexical ? "true" : "false";
    m["model.transformer.layers"] = std::to_string(c.transformer.layers);
    m["model.transformer.heads"] = std::to_string(c.transformer.heads);
    m["model.transformer.model_dim"] = std::to_string(c.transformer.model_dim);
    m["model.transformer.ff_dim"] = std::to_string(c.transformer.ff_dim);
    m["model.transformer.pos_kernel"] = std::to_string(c.transformer.pos_kernel);
    m["model.transformer.pos_groups"] = std::to_string(c.transformer.pos_groups);
    m["model.transformer.use_positional"] = c.transformer.use_positional ? "true" : "false";
    m["model.encoder_channels"] = join_longs(c.encoder_channels);
    m["model.decoder_channels"] = join_longs(c.decoder_channels);
    m["model.residual_units"] = std::to_string(c.residual_units);
    m["model.kd_phonetic_dim"] = std::to_string(c.kd_phonetic_dim);
    m["model.kd_lexical_dim"] = std::to_string(c.kd_lexical_dim);
    m["model.kd_rvq_layer"] = std::to_string(c.kd_rvq_layer);
    return m;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("config field " + key + ": expected true/false, got '" + v + "'");
}

// Applies one flat key to the config; returns false when the key is unknown.
inline bool apply_codec_config_kv(CodecConfig& c, const std::string& key, const std::string& val) {
    using namespace kv_detail;
    try {
        if (key == "model.name") c.name = val;
        else if (key == "model.sample_rate") c.sample_rate = std::stol(val);
        else if (key == "model.encoder_strides") c.encoder_strides = split_longs(val);
        else if (key == "model.embed_dim") c.embed_dim = std::stol(val);
        else if (key == "model.acoustic_layers") c.acoustic_layers = std::stol(val);
        else if (key == "model.acoustic_codebook") c.acoustic_codebook = std::stol(val);
        else if (key == "model.code_dim_acoustic") c.code_dim_acoustic = std::stol(val);
        else if (key == "model.phonetic_codebook") c.phonetic_codebook = std::stol(val);
        else if (key == "model.lexical_codebook") c.lexical_codebook = std::stol(val);
        else if (key == "model.code_dim_phonetic") c.code_dim_phonetic = std::stol(val);
        else if (key == "model.code_dim_lexical") c.code_dim_lexical = std::stol(val);
        else if (key == "model.branches") c.branches = branches_from(val);
        else if (key == "model.quantizer_style") c.quantizer_style = quantizer_style_from(val);
        else if (key == "model.normalized_lookup") c.normalized_lookup = parse_bool(val, key);
        else if (key == "model.quantizer_dropout") c.quantizer_dropout = parse_bool(val, key);
        else if (key == "model.branch_transformer_phonetic")
            c.branch_transformer_phonetic = parse_bool(val, key);
        else if (key == "model.branch_transformer_lexical")
            c.branch_transformer_lexical = parse_bool(val, key);
        else if (key == "model.transformer.layers") c.transformer.layers = std::stol(val);
        else if (key == "model.transformer.heads") c.transformer.heads = std::stol(val);
        else if (key == "model.transformer.model_dim") c.transformer.model_dim = std::stol(val);
        else if (key == "model.transformer.ff_dim") c.transformer.ff_dim = std::stol(val);
        else if (key == "model.transformer.pos_kernel") c.transformer.pos_kernel = std::stol(val);
        else if (key == "model.transformer.pos_groups") c.transformer.pos_groups = std::stol(val);
        else if (key == "model.transformer.use_positional")
            c.transformer.use_positional = parse_bool(val, key);
        else if (key == "model.encoder_channels") c.encoder_channels = split_longs(val);
        else if (key == "model.decoder_channels") c.decoder_channels = split_longs(val);
        else if (key == "model.residual_units") c.residual_units = std::stol(val);
        else if (key == "model.kd_phonetic_dim") c.kd_phonetic_dim = std::stol(val);
        else if (key == "model.kd_lexical_dim") c.kd_lexical_dim = std::stol(val);
        else if (key == "model.kd_rvq_layer") c.kd_rvq_layer = std::stol(val);
        else return false;
    } catch (const std::invalid_argument&) {
        throw Error("config field " + key + ": bad value '" + val + "'");
    }
    return true;
}

inline std::map<std::string, std::string> train_config_to_kv(const TrainConfig& t) {
    using namespace kv_detail;
    std::map<std::string, std::string> m;
    m["train.lr"] = fmt_real(t.lr);
    m["train.beta1"] = fmt_real(t.beta1);
    m["train.beta2"] = fmt_real(t.beta2);
    m["train.weight_decay"] = fmt_real(t.weight_decay);
    m["train.lr_gamma"] = fmt_real(t.lr_gamma);
    m["train.crop_seconds"] = fmt_real(t.crop_seconds);
    m["train.batch_seconds"] = fmt_real(t.batch_seconds);
    m["weights.mel"] = fmt_real(t.weights.mel);
    m["weights.adversarial"] = fmt_real(t.weights.adversarial);
    m["weights.feature_match"] = fmt_real(t.weights.feature_match);
    m["weights.codebook"] = fmt_real(t.weights.codebook);
    m["weights.commitment"] = fmt_real(t.weights.commitment);
    m["weights.kd_phn"] = fmt_real(t.weights.kd_phn);
    m["weights.kd_lex"] = fmt_real(t.weights.kd_lex);
    m["disc.periods"] = join_longs(t.disc.periods);
    m["disc.band_ffts"] = join_longs(t.disc.band_ffts);
    m["disc.channels"] = std::to_string(t.disc.channels);
    m["disc.layers"] = std::to_string(t.disc.layers);
    m["mel_loss.windows"] = join_longs(t.mel.windows);
    m["mel_loss.mels"] = join_longs(t.mel.mels);
    m["mel_loss.floor"] = fmt_real(t.mel.floor_val);
    m["train.ema_decay"] = fmt_real(t.ema_decay);
    m["train.ema_reinit_interval"] = std::to_string(t.ema_reinit_interval);
    return m;
}

inline bool apply_train_config_kv(TrainConfig& t, const std::string& key, const std::string& val) {
    using namespace kv_detail;
    try {
        if (key == "train.lr") t.lr = std::stod(val);
        else if (key == "train.beta1") t.beta1 = std::stod(val);
        else if (key == "train.beta2") t.beta2 = std::stod(val);
        else if (key == "train.weight_decay") t.weight_decay = std::stod(val);
        else if (key == "train.lr_gamma") t.lr_gamma = std::stod(val);
        else if (key == "train.crop_seconds") t.crop_seconds = std::stod(val);
        else if (key == "train.batch_seconds") t.batch_seconds = std::stod(val);
        else if (key == "weights.mel") t.weights.mel = std::stod(val);
        else if (key == "weights.adversarial") t.weights.adversarial = std::stod(val);
        else if (key == "weights.feature_match") t.weights.feature_match = std::stod(val);
        else if (key == "weights.codebook") t.weights.codebook = std::stod(val);
        else if (key == "weights.commitment") t.weights.commitment = std::stod(val);
        else if (key == "weights.kd_phn") t.weights.kd_phn = std::stod(val);
        else if (key == "weights.kd_lex") t.weights.kd_lex = std::stod(val);
        else if (key == "disc.periods") t.disc.periods = split_longs(val);
        else if (key == "disc.band_ffts") t.disc.band_ffts = split_longs(val);
        else if (key == "disc.channels") t.disc.channels = std::stol(val);
        else if (key == "disc.layers") t.disc.layers = std::stol(val);
        else if (key == "mel_loss.windows") t.mel.windows = split_longs(val);
        else if (key == "mel_loss.mels") t.mel.mels = split_longs(val);
        else if (key == "mel_loss.floor") t.mel.floor_val = std::stod(val);
        else if (key == "train.ema_decay") t.ema_decay = std::stod(val);
        else if (key == "train.ema_reinit_interval") t.ema_reinit_interval = std::stol(val);
        else return false;
    } catch (const std::invalid_argument&) {
        throw Error("config field " + key + ": bad value '" + val + "'");
    }
    return true;
}

// Canonical text used for config hashing and the checkpoint echo.
inline std::string canonical_config_text(const CodecConfig& c) {
    std::string out;
    for (const auto& [k, v] : codec_config_to_kv(c)) out += k + " = " + v + "\n";
    return out;
}

inline std::string config_hash(const CodecConfig& c) {
    std::ostringstream os;
    os << std::hex << fnv1a64(canonical_config_text(c));
    return os.str();
}

}  // namespace hac
