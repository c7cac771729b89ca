#pragma once

#include <fstream>

#include "hac/train/dataset.hpp"
#include "hac/train/trainer.hpp"

namespace hac {

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Everything one training run needs, assembled from a preset, a key/value
// config file, and command-line overrides (applied in that order).
struct RunConfig {
    std::string preset;
    CodecConfig model;
    TrainConfig train;
    std::uint64_t seed = 0;
    long steps = 0;
    long checkpoint_every = 0;
    std::string out_dir = "runs/default";
    std::string data_root;
    TeacherMode teacher_phonetic = TeacherMode::none;
    TeacherMode teacher_lexical = TeacherMode::none;
    std::string resume_from;

    DatasetOptions dataset_options() const {
        DatasetOptions o;
        o.phonetic = teacher_phonetic;
        o.lexical = teacher_lexical;
        o.mock_seed = seed;
        return o;
    }

    void validate_for_training() const {
        if (data_root.empty())
            throw ConfigError("config field data.root: required for training but missing");
        if (!std::filesystem::is_directory(data_root))
            throw ConfigError("config field data.root: directory does not exist: " + data_root);
        if (steps < 0) throw ConfigError("config field steps: must be >= 0");
        if (out_dir.empty()) throw ConfigError("config field out_dir: must not be empty");
        try {
            model.validate();
            train.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
};

namespace runcfg_detail {

inline std::string trim(std::string s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    return s;
}

// file order preserved so later keys override earlier ones
inline std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

inline void apply_key(RunConfig& rc, const std::string& key, const std::string& val) {
    try {
        if (key == "schema_version") {
            if (val != "1")
                throw ConfigError("config field schema_version: expected 1, got '" + val + "'");
        } else if (key == "preset") {
            Preset p = make_preset(val);
            rc.preset = val;
            rc.model = p.model;
            rc.train = p.train;
        } else if (key == "seed") rc.seed = (std::uint64_t)std::stoull(val);
        else if (key == "steps") rc.steps = std::stol(val);
        else if (key == "checkpoint_every") rc.checkpoint_every = std::stol(val);
        else if (key == "out_dir") rc.out_dir = val;
        else if (key == "data.root") rc.data_root = val;
        else if (key == "data.teacher_phonetic") rc.teacher_phonetic = teacher_mode_from(val);
        else if (key == "data.teacher_lexical") rc.teacher_lexical = teacher_mode_from(val);
        else if (apply_codec_config_kv(rc.model, key, val)) {}
        else if (apply_train_config_kv(rc.train, key, val)) {}
        else throw ConfigError("config field " + key + ": unknown key");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config field " + key + ": " + e.what());
    }
}

}  // namespace runcfg_detail

inline RunConfig parse_run_config(const std::string& path,
                                  const std::vector<std::string>& overrides) {
    RunConfig rc;
    bool saw_preset_or_model = false;
    auto entries = runcfg_detail::read_kv_file(path);
    bool saw_schema = false;
    for (const auto& [k, v] : entries) {
        if (k == "schema_version") saw_schema = true;
        if (k == "preset" || k.rfind("model.", 0) == 0) saw_preset_or_model = true;
        runcfg_detail::apply_key(rc, k, v);
    }
    if (!saw_schema) throw ConfigError("config field schema_version: required but missing");
    if (!saw_preset_or_model)
        throw ConfigError("config field preset: a preset or explicit model.* keys are required");
    for (const std::string& ov : overrides) {
        const size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "': expected key=value");
        runcfg_detail::apply_key(rc, runcfg_detail::trim(ov.substr(0, eq)),
                                 runcfg_detail::trim(ov.substr(eq + 1)));
    }
    // environment override for the output directory only
    if (const char* env = std::getenv("HAC_OUT_DIR")) {
        if (*env) rc.out_dir = env;
    }
    return rc;
}

}  // namespace hac
