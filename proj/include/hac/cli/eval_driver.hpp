#pragma once

#include <fstream>
#include <set>

#include "hac/codec/checkpoint.hpp"
#include "hac/eval/abx.hpp"
#include "hac/eval/pnmi.hpp"
#include "hac/eval/recon_metrics.hpp"
#include "hac/eval/word_f1.hpp"

#include <json.hpp>

namespace hac {

struct EvalRequest {
    std::string model_label = "model";
    std::set<std::string> metrics;            // pnmi, wordf1, abx, recon
    std::vector<std::string> layers;          // empty: every token layer
    std::string abx_manifest;
    std::string abx_features = "codebook";    // codebook | onehot
    std::vector<AbxPairing> abx_pairings = {AbxPairing::within_speaker,
                                            AbxPairing::across_speaker};
    EvalSpectralConfig spectral;
};

struct EvalUtterance {
    std::string id;
    Waveform audio;                    // only in checkpoint mode
    std::vector<AlignmentTier> tiers;
    TokenMatrix tokens;
};

struct MetricValue {
    std::string metric;
    std::string layer;  // empty when not layer-scoped
    real value = 0.0;
};

struct EvalResult {
    std::vector<MetricValue> summary;
    std::map<std::string, WordDetectorResult> wordf1_per_layer;
};

namespace eval_detail {

inline std::vector<std::string> list_ids(const std::string& dir, const std::string& ext) {
    namespace fs = std::filesystem;
    check(fs::is_directory(dir), "directory does not exist: " + dir);
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ext) ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());
    check(!ids.empty(), "no *" + ext + " files under " + dir);
    return ids;
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::string>& rows) {
    std::ofstream out(path);
    check(out.good(), "cannot open for writing: " + path);
    out << header << "\n";
    for (const auto& r : rows) out << r << "\n";
    out.close();
    check(out.good(), "write failed: " + path);
}

inline std::string fmt(real v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct ManifestEntry {
    std::string utt;
    real start = 0, end = 0;
    std::string category, speaker;
};

inline std::vector<ManifestEntry> parse_abx_manifest(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "cannot open abx manifest: " + path);
    std::vector<ManifestEntry> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream is(line);
        ManifestEntry e;
        if (!(is >> e.utt)) continue;
        check((bool)(is >> e.start >> e.end >> e.category >> e.speaker),
              path + ":" + std::to_string(lineno) +
                  ": expected 'utt start end category speaker'");
        check(e.start < e.end, path + ":" + std::to_string(lineno) + ": start >= end");
        out.push_back(std::move(e));
    }
    check(!out.empty(), "abx manifest has no entries: " + path);
    return out;
}

}  // namespace eval_detail

// Loads a corpus for evaluation. With a model, audio is encoded on the fly;
// with a token directory, .hact files are read directly.
inline std::vector<EvalUtterance> load_eval_corpus(const std::string& corpus_root,
                                                   const CodecModel* model,
                                                   const std::string& tokens_dir) {
    namespace fs = std::filesystem;
    std::vector<EvalUtterance> utts;
    if (model != nullptr) {
        for (const auto& id : eval_detail::list_ids((fs::path(corpus_root) / "wav").string(),
                                                    ".wav")) {
            EvalUtterance u;
            u.id = id;
            u.audio = load_waveform((fs::path(corpus_root) / "wav" / (id + ".wav")).string(),
                                    model->config().sample_rate);
            const fs::path ali = fs::path(corpus_root) / "ali" / (id + ".ali");
            if (fs::exists(ali)) u.tiers = parse_alignment(ali.string());
            u.tokens = model->encode_tokens(u.audio);
            utts.push_back(std::move(u));
        }
    } else {
        check(!tokens_dir.empty(), "evaluation needs a checkpoint or a token directory");
        for (const auto& id : eval_detail::list_ids(tokens_dir, ".hact")) {
            EvalUtterance u;
            u.id = id;
            u.tokens = read_tokens((fs::path(tokens_dir) / (id + ".hact")).string());
            const fs::path ali = fs::path(corpus_root) / "ali" / (id + ".ali");
            if (fs::exists(ali)) u.tiers = parse_alignment(ali.string());
            utts.push_back(std::move(u));
        }
    }
    return utts;
}

inline EvalResult run_eval(const std::vector<EvalUtterance>& utts, const CodecModel* model,
                           const EvalRequest& req, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    EvalResult result;
    const std::string hash = model ? config_hash(model->config()) : "tokens-only";

    std::vector<std::string> layers = req.layers;
    if (layers.empty())
        for (const auto& l : utts.front().tokens.layers) layers.push_back(l.name);

    const real frame_rate = utts.front().tokens.frame_rate;

    if (req.metrics.count("pnmi")) {
        std::vector<std::string> rows;
        for (const auto& layer : layers) {
            PnmiCounter counter;
            for (const auto& u : utts) {
                const AlignmentTier* phones = find_tier(u.tiers, TierKind::phone);
                if (!phones) continue;
                const std::vector<long> codes = layer_codes(u.tokens, layer);
                counter.add_frames(
                    align_to_frames(*phones, frame_rate, (long)codes.size()), codes);
            }
            check(counter.total() > 0, "pnmi: no aligned frames; missing phone tiers?");
            const real v = counter.value();
            rows.push_back(req.model_label + "," + layer + "," + eval_detail::fmt(v));
            result.summary.push_back({"pnmi", layer, v});
        }
        eval_detail::write_csv(out_dir + "/pnmi.csv", "model,layer,pnmi", rows);
    }

    if (req.metrics.count("wordf1")) {
        std::vector<std::string> rows, curve_rows;
        for (const auto& layer : layers) {
            std::vector<UtteranceTokens> ut;
            for (const auto& u : utts) {
                const AlignmentTier* words = find_tier(u.tiers, TierKind::word);
                if (!words) continue;
                ut.push_back({layer_codes(u.tokens, layer), *words});
            }
            check(!ut.empty(), "word detector: no utterances with word tiers");
            WordDetectorResult r = word_detector_f1(ut, frame_rate);
            for (const auto& row : r.table)
                rows.push_back(req.model_label + "," + layer + "," + row.word + "," +
                               std::to_string(row.token) + "," + eval_detail::fmt(row.precision) +
                               "," + eval_detail::fmt(row.recall) + "," +
                               eval_detail::fmt(row.f1) + "," +
                               std::to_string(row.word_occurrences) + "," +
                               std::to_string(row.hits) + "," +
                               std::to_string(row.runs_on_word) + "," +
                               std::to_string(row.runs_assigned));
            for (const auto& [tau, count] : r.curve)
                curve_rows.push_back(req.model_label + "," + layer + "," +
                                     eval_detail::fmt(tau) + "," + std::to_string(count));
            result.summary.push_back({"wordf1_detectors_at_0.5", layer,
                                      (real)detectors_at(r, 0.5)});
            result.wordf1_per_layer[layer] = std::move(r);
        }
        eval_detail::write_csv(
            out_dir + "/wordf1.csv",
            "model,layer,word,token,precision,recall,f1,word_occurrences,hits,"
            "runs_on_word,runs_assigned",
            rows);
        eval_detail::write_csv(out_dir + "/wordf1_curve.csv", "model,layer,threshold,count",
                               curve_rows);
    }

    if (req.metrics.count("recon")) {
        check(model != nullptr, "reconstruction metrics need a checkpoint");
        real mel_acc = 0, stft_acc = 0, sdr_acc = 0;
        long n = 0;
        for (const auto& u : utts) {
            const long factor = model->downsample_factor();
            const long t = (u.audio.size() / factor) * factor;
            Waveform ref;
            ref.sample_rate = u.audio.sample_rate;
            ref.samples.assign(u.audio.samples.begin(), u.audio.samples.begin() + t);
            Waveform recon = model->decode_tokens(u.tokens);
            mel_acc += mel_distance(ref, recon, req.spectral);
            stft_acc += stft_distance(ref, recon, req.spectral);
            sdr_acc += si_sdr(ref, recon);
            ++n;
        }
        std::vector<std::string> rows{
            req.model_label + ",mel_distance," + eval_detail::fmt(mel_acc / (real)n),
            req.model_label + ",stft_distance," + eval_detail::fmt(stft_acc / (real)n),
            req.model_label + ",si_sdr," + eval_detail::fmt(sdr_acc / (real)n)};
        eval_detail::write_csv(out_dir + "/recon.csv", "model,metric,value", rows);
        result.summary.push_back({"mel_distance", "", mel_acc / (real)n});
        result.summary.push_back({"stft_distance", "", stft_acc / (real)n});
        result.summary.push_back({"si_sdr", "", sdr_acc / (real)n});
    }

    if (req.metrics.count("abx")) {
        check(!req.abx_manifest.empty(), "abx needs a manifest file");
        const auto entries = eval_detail::parse_abx_manifest(req.abx_manifest);
        std::map<std::string, const EvalUtterance*> by_id;
        for (const auto& u : utts) by_id[u.id] = &u;
        std::vector<std::string> rows;
        for (const auto& layer : layers) {
            std::vector<AbxItem> items;
            for (const auto& e : entries) {
                auto it = by_id.find(e.utt);
                check(it != by_id.end(), "abx manifest references unknown utterance " + e.utt);
                const EvalUtterance& u = *it->second;
                const std::vector<long> codes = layer_codes(u.tokens, layer);
                long f0 = -1, f1 = -1;
                for (long f = 0; f < (long)codes.size(); ++f) {
                    const real center = ((real)f + 0.5) / frame_rate;
                    if (center >= e.start && center < e.end) {
                        if (f0 < 0) f0 = f;
                        f1 = f;
                    }
                }
                check(f0 >= 0, "abx manifest span covers no frames: " + e.utt + " [" +
                                   std::to_string(e.start) + ", " + std::to_string(e.end) + ")");
                AbxItem item;
                item.category = e.category;
                item.speaker = e.speaker;
                std::vector<long> span(codes.begin() + f0, codes.begin() + f1 + 1);
                if (req.abx_features == "onehot" || model == nullptr) {
                    long k = 0;
                    for (const auto& l : u.tokens.layers)
                        if (l.name == layer) k = l.codebook_size;
                    item.features = onehot_features(span, k);
                } else {
                    Mat all = model->layer_embeddings(u.tokens, layer);
                    item.features = Mat((long)span.size(), all.cols);
                    for (long f = f0; f <= f1; ++f)
                        std::copy(all.row(f), all.row(f) + all.cols,
                                  item.features.row(f - f0));
                }
                items.push_back(std::move(item));
            }
            for (AbxPairing pairing : req.abx_pairings) {
                const real err = abx_error(items, pairing);
                const std::string pname =
                    pairing == AbxPairing::within_speaker ? "within_speaker" : "across_speaker";
                rows.push_back(req.model_label + "," + layer + "," + pname + "," +
                               req.abx_features + "," + eval_detail::fmt(err));
                result.summary.push_back({"abx_" + pname, layer, err});
            }
        }
        eval_detail::write_csv(out_dir + "/abx.csv", "model,layer,pairing,features,error", rows);
    }

    // machine-readable summary
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& m : result.summary) {
        nlohmann::json row;
        row["metric"] = m.metric;
        if (!m.layer.empty()) row["layer"] = m.layer;
        row["value"] = m.value;
        row["config_hash"] = hash;
        row["model"] = req.model_label;
        summary.push_back(row);
    }
    std::ofstream js(out_dir + "/summary.json");
    js << summary.dump(2) << "\n";

    return result;
}

}  // namespace hac
