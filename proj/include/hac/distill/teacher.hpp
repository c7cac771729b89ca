#pragma once

#include "hac/audio/wav.hpp"
#include "hac/core/rng.hpp"
#include "hac/data/alignment.hpp"
#include "hac/data/teacher_file.hpp"

namespace hac {

enum class TeacherRole { phonetic, lexical };
enum class TeacherSource { precomputed_file, mock };

struct TeacherSpec {
    TeacherRole role = TeacherRole::phonetic;
    long dim = 768;
    TeacherSource source = TeacherSource::mock;
    Granularity granularity = Granularity::frame;

    void validate() const {
        check(dim > 0, "teacher spec: dim must be positive");
        if (role == TeacherRole::phonetic)
            check(granularity == Granularity::frame,
                  "teacher spec: phonetic teachers are frame-granularity");
        else
            check(granularity != Granularity::frame || source == TeacherSource::precomputed_file,
                  "teacher spec: frame-granularity lexical teachers must be precomputed");
    }
};

// Elementwise mean across a stack of equally-shaped layer outputs.
inline Mat avg_layers(const std::vector<Mat>& layers) {
    check(!layers.empty(), "avg_layers: empty list");
    const long r = layers[0].rows, c = layers[0].cols;
    for (const auto& m : layers)
        check(m.rows == r && m.cols == c, "avg_layers: shape mismatch");
    Mat out(r, c);
    for (const auto& m : layers)
        for (size_t i = 0; i < m.v.size(); ++i) out.v[i] += m.v[i];
    const real inv = 1.0 / (real)layers.size();
    for (auto& v : out.v) v *= inv;
    return out;
}

struct FrameExpanded {
    Mat values;              // F x dim; zero rows where uncovered
    std::vector<bool> mask;  // true where a word interval covers the frame center
};

// Spreads word-level (or utterance-level) teacher rows across frames: each
// frame takes the row of the interval containing its center; uncovered frames
// get zeros and a false mask so the loss skips them.
inline FrameExpanded expand_to_frames(const TeacherEmbeddings& teacher,
                                      const AlignmentTier& word_tier, long num_frames,
                                      real frame_rate) {
    check(teacher.granularity != Granularity::frame,
          "expand_to_frames: teacher is already frame granularity");
    FrameExpanded out;
    out.values = Mat(num_frames, teacher.dim);
    out.mask.assign((size_t)num_frames, false);
    if (teacher.granularity == Granularity::utterance) {
        for (long f = 0; f < num_frames; ++f) {
            std::copy(teacher.values.row(0), teacher.values.row(0) + teacher.dim,
                      out.values.row(f));
            out.mask[(size_t)f] = true;
        }
        return out;
    }
    check(teacher.values.rows == (long)word_tier.intervals.size(),
          "expand_to_frames: " + std::to_string(teacher.values.rows) + " teacher rows vs " +
              std::to_string(word_tier.intervals.size()) + " word intervals");
    const std::vector<long> idx = frame_interval_indices(word_tier, frame_rate, num_frames);
    for (long f = 0; f < num_frames; ++f) {
        const long w = idx[(size_t)f];
        if (w < 0) continue;
        std::copy(teacher.values.row(w), teacher.values.row(w) + teacher.dim, out.values.row(f));
        out.mask[(size_t)f] = true;
    }
    return out;
}

// Deterministic embedding for a word label: N(0,1) draws from an engine
// seeded by the label hash, so equal labels give equal rows everywhere.
inline std::vector<real> hash_word_embedding(const std::string& label, std::uint64_t seed,
                                             long dim) {
    Rng rng(fnv1a64(label) ^ (seed * 0x9E3779B97F4A7C15ull));
    std::vector<real> v((size_t)dim);
    rng.fill_normal(v);
    return v;
}

// Frame-granularity stand-in for a pretrained speech encoder: a fixed random
// linear map of log-mel features, frame-locked to the codec hop.
inline TeacherEmbeddings mock_phonetic_teacher(const Waveform& x, std::uint64_t seed, long dim,
                                               long hop) {
    check(hop >= 1, "mock teacher: hop must be positive");
    long win = 64;
    while (win < 2 * hop) win *= 2;
    const long n_mels = std::min<long>(40, win / 2 + 1);
    Mat mel = log_mel_frames(x.samples, hop, win, n_mels, x.sample_rate);
    Rng rng(seed ^ 0xA5A5A5A5DEADBEEFull);
    Mat map(n_mels, dim);
    rng.fill_normal(map.v, 1.0 / std::sqrt((real)n_mels));
    TeacherEmbeddings out;
    out.granularity = Granularity::frame;
    out.dim = dim;
    out.values = Mat(mel.rows, dim);
    for (long f = 0; f < mel.rows; ++f)
        for (long j = 0; j < dim; ++j) {
            real acc = 0;
            for (long m = 0; m < n_mels; ++m) acc += mel.at(f, m) * map.at(m, j);
            out.values.at(f, j) = acc;
        }
    out.frame_rate_num = x.sample_rate;
    out.frame_rate_den = hop;
    out.validate();
    return out;
}

// Word-granularity stand-in for a text encoder: one hash embedding per word
// interval, determined entirely by the label and the seed.
inline TeacherEmbeddings mock_lexical_teacher(const AlignmentTier& word_tier, std::uint64_t seed,
                                              long dim) {
    check(!word_tier.intervals.empty(), "mock teacher: empty word tier");
    TeacherEmbeddings out;
    out.granularity = Granularity::word;
    out.dim = dim;
    out.values = Mat((long)word_tier.intervals.size(), dim);
    for (long i = 0; i < out.values.rows; ++i) {
        const std::vector<real> e =
            hash_word_embedding(word_tier.intervals[(size_t)i].label, seed, dim);
        std::copy(e.begin(), e.end(), out.values.row(i));
    }
    out.validate();
    return out;
}

}  // namespace hac
