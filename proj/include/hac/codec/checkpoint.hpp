#pragma once

#include "hac/codec/model.hpp"
#include "hac/nn/adamw.hpp"

namespace hac {

namespace ckpt_detail {
inline constexpr char kMagic[4] = {'H', 'A', 'C', 'K'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint32_t kHasTraining = 1u << 0;  // optimizer blobs + rng

inline void write_named_tensors(BinWriter& w, const ParamMap& params) {
    w.u32((std::uint32_t)params.size());
    for (const auto& [name, t] : params) {
        w.str(name);
        w.u8((std::uint8_t)t.rank());
        for (long d : t.shape()) w.u64((std::uint64_t)d);
        for (real v : t.values()) w.f64(v);
    }
}

inline void read_named_tensors(BinReader& r, ParamMap& params, const std::string& what) {
    const std::uint32_t n = r.u32();
    check(n == params.size(), what + ": tensor count mismatch (file " + std::to_string(n) +
                                  ", model " + std::to_string(params.size()) + ")");
    for (auto& [name, t] : params) {
        const std::string fname = r.str();
        check(fname == name, what + ": tensor order mismatch: file has '" + fname +
                                 "', model expects '" + name + "'");
        const int rank = (int)r.u8();
        check(rank == t.rank(), what + ": rank mismatch at " + name);
        for (int i = 0; i < rank; ++i)
            check((long)r.u64() == t.shape()[(size_t)i], what + ": shape mismatch at " + name);
        for (long i = 0; i < t.numel(); ++i) const_cast<Tensor&>(t).data()[i] = r.f64();
    }
}

inline void write_named_vectors(BinWriter& w,
                                const std::vector<std::pair<std::string, std::vector<real>>>& v) {
    w.u32((std::uint32_t)v.size());
    for (const auto& [name, vec] : v) {
        w.str(name);
        w.f64_vec(vec);
    }
}

inline std::vector<std::pair<std::string, std::vector<real>>> read_named_vectors(BinReader& r) {
    std::vector<std::pair<std::string, std::vector<real>>> out;
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        out.emplace_back(std::move(name), r.f64_vec());
    }
    return out;
}

}  // namespace ckpt_detail

// Versioned container: config echo, step counter, named generator tensors and
// EMA state, plus (optionally) discriminator tensors, both optimizer states
// and the training RNG. Inference checkpoints drop the training section.
struct CheckpointMeta {
    std::uint16_t version = ckpt_detail::kVersion;
    std::uint64_t step = 0;
    bool has_training = false;
    CodecConfig config;
};

inline void save_checkpoint(const std::string& path, const CodecModel& model, std::uint64_t step,
                            const ParamMap* disc_params = nullptr,
                            const AdamW* gen_opt = nullptr, const AdamW* disc_opt = nullptr,
                            const Rng* rng = nullptr) {
    const bool training = disc_params && gen_opt && disc_opt && rng;
    BinWriter w(path);
    w.bytes(ckpt_detail::kMagic, 4);
    w.u16(ckpt_detail::kVersion);
    w.u32(training ? ckpt_detail::kHasTraining : 0);
    w.str(canonical_config_text(model.config()));
    w.u64(step);
    ckpt_detail::write_named_tensors(w, model.parameters());
    ckpt_detail::write_named_vectors(w, model.aux_state());
    if (training) {
        ckpt_detail::write_named_tensors(w, *disc_params);
        gen_opt->save(w);
        disc_opt->save(w);
        w.str(rng->save_state());
    }
    w.close();
}

// Reads only the header (config echo + step) so callers can rebuild the model.
inline CheckpointMeta read_checkpoint_meta(const std::string& path) {
    BinReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    check(std::memcmp(magic, ckpt_detail::kMagic, 4) == 0, "not a checkpoint file: " + path);
    CheckpointMeta meta;
    meta.version = r.u16();
    check(meta.version == ckpt_detail::kVersion,
          "checkpoint version mismatch: got " + std::to_string(meta.version) + ": " + path);
    const std::uint32_t flags = r.u32();
    meta.has_training = flags & ckpt_detail::kHasTraining;
    const std::string cfg_text = r.str();
    std::istringstream is(cfg_text);
    std::string line;
    while (std::getline(is, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.pop_back();
        };
        trim(key);
        trim(val);
        check(apply_codec_config_kv(meta.config, key, val),
              "checkpoint: unknown config key '" + key + "': " + path);
    }
    meta.config.validate();
    meta.step = r.u64();
    return meta;
}

// Loads model tensors; the model must already match the checkpoint config.
// Returns the reader positioned at the start of the training section.
inline std::unique_ptr<BinReader> load_checkpoint_into(const std::string& path, CodecModel& model,
                                                       CheckpointMeta* meta_out = nullptr) {
    CheckpointMeta meta = read_checkpoint_meta(path);
    check(canonical_config_text(meta.config) == canonical_config_text(model.config()),
          "checkpoint config does not match the model: " + path);
    auto r = std::make_unique<BinReader>(path);
    char magic[4];
    r->bytes(magic, 4);
    r->u16();
    r->u32();
    r->str();
    r->u64();
    ParamMap params = model.parameters();
    ckpt_detail::read_named_tensors(*r, params, "checkpoint " + path);
    model.load_aux_state(ckpt_detail::read_named_vectors(*r));
    if (meta_out) *meta_out = meta;
    return r;
}

// Convenience: rebuild a model from a checkpoint alone.
inline CodecModel load_model(const std::string& path, CheckpointMeta* meta_out = nullptr) {
    CheckpointMeta meta = read_checkpoint_meta(path);
    Rng scratch(0);
    CodecModel model(meta.config, scratch);
    load_checkpoint_into(path, model);
    if (meta_out) *meta_out = meta;
    return model;
}

// Standalone codebook export: the bottleneck lookup tables and projections
// without any network weights.
namespace cbexp_detail {
inline constexpr char kMagic[4] = {'H', 'A', 'C', 'B'};
inline constexpr std::uint16_t kVersion = 1;
}  // namespace cbexp_detail

inline void export_codebooks(const std::string& path, const CodecModel& model) {
    BinWriter w(path);
    w.bytes(cbexp_detail::kMagic, 4);
    w.u16(cbexp_detail::kVersion);
    ParamMap cbs;
    ParamMap all = model.parameters();
    for (const auto& [name, t] : all) {
        const bool is_cb = name.find("entries") != std::string::npos ||
                           name.find("project_in") != std::string::npos ||
                           name.find("project_out") != std::string::npos;
        if (is_cb) cbs.emplace_back(name, t);
    }
    ckpt_detail::write_named_tensors(w, cbs);
    w.close();
}

}  // namespace hac
