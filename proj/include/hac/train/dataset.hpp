#pragma once

#include <filesystem>

#include "hac/codec/model.hpp"

namespace hac {

enum class TeacherMode { none, mock, file };

inline TeacherMode teacher_mode_from(const std::string& s) {
    if (s == "none") return TeacherMode::none;
    if (s == "mock") return TeacherMode::mock;
    if (s == "file") return TeacherMode::file;
    throw Error("teacher mode must be none/mock/file, got '" + s + "'");
}

// One utterance with everything precomputed at the codec frame rate:
// waveform, tiers, a full-length phonetic teacher matrix and a full-length
// frame-expanded lexical teacher (values + coverage mask). Crops slice rows.
struct Utterance {
    std::string id;
    Waveform audio;
    long frames = 0;
    std::vector<AlignmentTier> tiers;
    Mat phonetic;                      // frames x D' (empty when unused)
    Mat lexical;                       // frames x D''
    std::vector<bool> lexical_mask;

    const AlignmentTier* tier(TierKind k) const { return find_tier(tiers, k); }
};

struct DatasetOptions {
    TeacherMode phonetic = TeacherMode::none;
    TeacherMode lexical = TeacherMode::none;
    std::uint64_t mock_seed = 0;
};

// Layout under the corpus root: wav/<id>.wav, ali/<id>.ali,
// teacher_phn/<id>.hte, teacher_lex/<id>.hte.
class Dataset {
public:
    Dataset() = default;

    static Dataset load(const std::string& root, const CodecConfig& cfg,
                        const DatasetOptions& opts) {
        namespace fs = std::filesystem;
        check(fs::is_directory(root), "data root does not exist: " + root);
        check(fs::is_directory(fs::path(root) / "wav"),
              "data root has no wav/ directory: " + root);
        Dataset ds;
        ds.frame_rate_ = cfg.frame_rate();
        std::vector<std::string> ids;
        for (const auto& entry : fs::directory_iterator(fs::path(root) / "wav"))
            if (entry.path().extension() == ".wav") ids.push_back(entry.path().stem().string());
        std::sort(ids.begin(), ids.end());
        check(!ids.empty(), "no wav files under " + root + "/wav");

        const long factor = cfg.downsample_factor();
        for (const auto& id : ids) {
            Utterance u;
            u.id = id;
            u.audio = load_waveform((fs::path(root) / "wav" / (id + ".wav")).string(),
                                    cfg.sample_rate);
            u.frames = u.audio.size() / factor;
            check(u.frames >= 1, "utterance shorter than one frame: " + id);

            const fs::path ali = fs::path(root) / "ali" / (id + ".ali");
            if (fs::exists(ali)) u.tiers = parse_alignment(ali.string());

            if (opts.phonetic == TeacherMode::mock) {
                TeacherEmbeddings t =
                    mock_phonetic_teacher(u.audio, opts.mock_seed, cfg.kd_phonetic_dim, factor);
                u.phonetic = resample_teacher_frames(t, u.frames, cfg.frame_rate());
            } else if (opts.phonetic == TeacherMode::file) {
                const fs::path p = fs::path(root) / "teacher_phn" / (id + ".hte");
                check(fs::exists(p), "missing phonetic teacher file: " + p.string());
                TeacherEmbeddings t = load_teacher_embeddings(p.string());
                check(t.granularity == Granularity::frame,
                      "phonetic teacher must be frame granularity: " + p.string());
                check(t.dim == cfg.kd_phonetic_dim,
                      "phonetic teacher dim " + std::to_string(t.dim) + " != configured " +
                          std::to_string(cfg.kd_phonetic_dim) + ": " + p.string());
                u.phonetic = resample_teacher_frames(t, u.frames, cfg.frame_rate());
            }

            if (opts.lexical != TeacherMode::none) {
                TeacherEmbeddings t;
                if (opts.lexical == TeacherMode::mock) {
                    const AlignmentTier* words = u.tier(TierKind::word);
                    check(words != nullptr,
                          "lexical mock teacher needs a word tier for utterance " + id);
                    t = mock_lexical_teacher(*words, opts.mock_seed, cfg.kd_lexical_dim);
                } else {
                    const fs::path p = fs::path(root) / "teacher_lex" / (id + ".hte");
                    check(fs::exists(p), "missing lexical teacher file: " + p.string());
                    t = load_teacher_embeddings(p.string());
                    check(t.dim == cfg.kd_lexical_dim,
                          "lexical teacher dim " + std::to_string(t.dim) + " != configured " +
                              std::to_string(cfg.kd_lexical_dim) + ": " + p.string());
                }
                if (t.granularity == Granularity::frame) {
                    u.lexical = resample_teacher_frames(t, u.frames, cfg.frame_rate());
                    u.lexical_mask.assign((size_t)u.frames, true);
                } else {
                    const AlignmentTier* words = u.tier(TierKind::word);
                    check(words != nullptr || t.granularity == Granularity::utterance,
                          "word-granularity lexical teacher needs a word tier: " + id);
                    static const AlignmentTier kEmpty{TierKind::word, {}};
                    FrameExpanded fx = expand_to_frames(t, words ? *words : kEmpty, u.frames,
                                                        cfg.frame_rate());
                    u.lexical = std::move(fx.values);
                    u.lexical_mask = std::move(fx.mask);
                }
            }
            ds.utterances_.push_back(std::move(u));
        }
        return ds;
    }

    long size() const { return (long)utterances_.size(); }
    const Utterance& at(long i) const { return utterances_[(size_t)i]; }
    real frame_rate() const { return frame_rate_; }

    struct Crop {
        Waveform audio;
        Mat phonetic;
        Mat lexical;
        std::vector<bool> lexical_mask;
        long utterance = 0;
        long start_frame = 0;
    };

    // Frame-aligned random crop; teachers are sliced identically to the audio.
    Crop sample_crop(Rng& rng, long crop_samples, long factor) const {
        check(crop_samples % factor == 0, "crop length must be a whole number of frames");
        const long crop_frames = crop_samples / factor;
        const long ui = rng.uniform_int(size());
        const Utterance& u = utterances_[(size_t)ui];
        check(u.frames >= crop_frames, "utterance " + u.id + " shorter than the crop (" +
                                           std::to_string(u.frames) + " < " +
                                           std::to_string(crop_frames) + " frames)");
        const long start = rng.uniform_int(u.frames - crop_frames + 1);
        Crop c;
        c.utterance = ui;
        c.start_frame = start;
        c.audio.sample_rate = u.audio.sample_rate;
        c.audio.samples.assign(u.audio.samples.begin() + start * factor,
                               u.audio.samples.begin() + (start + crop_frames) * factor);
        if (u.phonetic.rows > 0) {
            c.phonetic = Mat(crop_frames, u.phonetic.cols);
            std::copy(u.phonetic.row(start), u.phonetic.row(start + crop_frames),
                      c.phonetic.v.begin());
        }
        if (u.lexical.rows > 0) {
            c.lexical = Mat(crop_frames, u.lexical.cols);
            std::copy(u.lexical.row(start), u.lexical.row(start + crop_frames),
                      c.lexical.v.begin());
            c.lexical_mask.assign(u.lexical_mask.begin() + start,
                                  u.lexical_mask.begin() + start + crop_frames);
        }
        return c;
    }

private:
    std::vector<Utterance> utterances_;
    real frame_rate_ = 0.0;
};

}  // namespace hac
