#pragma once

#include <filesystem>

#include "hac/data/teacher_file.hpp"
#include "hac/distill/teacher.hpp"

namespace hac {

// Synthetic diagnostic corpus: "phonemes" are harmonic tones, "words" are
// fixed phoneme triples, and utterances are word sequences separated by
// silence. Speaker profiles vary gain, spectral tilt and detune so that raw
// acoustics carry more than phoneme identity. Ships with exact alignments
// and noisy one-hot phoneme teacher files.
struct SynthCorpusSpec {
    long sample_rate = 8000;
    long hop = 160;  // teacher rows per second = sample_rate / hop
    long utterances = 48;
    long words_min = 3;
    long words_max = 5;
    std::uint64_t seed = 1234;
    real noise = 0.01;
    real teacher_noise = 0.1;
    long lexical_dim = 16;
    bool write_lexical_files = false;  // mock teachers cover the lexical side
};

namespace synth_detail {

inline constexpr long kNumPhonemes = 8;
inline constexpr long kNumWords = 12;
inline constexpr long kNumSpeakers = 4;

inline real phoneme_freq(long p) {
    static const real f[kNumPhonemes] = {220.0, 311.0, 415.0, 554.0, 740.0, 988.0, 1319.0, 1760.0};
    return f[p];
}

// every phoneme appears in at least four distinct words
inline const long* word_phonemes(long w) {
    static const long table[kNumWords][3] = {
        {0, 1, 2}, {3, 4, 5}, {6, 7, 0}, {1, 3, 6}, {2, 4, 7}, {5, 0, 3},
        {7, 1, 4}, {2, 6, 5}, {4, 0, 6}, {5, 7, 2}, {3, 0, 7}, {1, 6, 4},
    };
    return table[w];
}

inline std::string word_label(long w) {
    return w < 10 ? "w0" + std::to_string(w) : "w" + std::to_string(w);
}

inline std::string phoneme_label(long p) { return "p" + std::to_string(p); }

struct Speaker {
    real gain;
    real tilt;    // harmonic rolloff
    real detune;  // fundamental scaling
};

inline Speaker speaker_profile(long s) {
    static const Speaker profiles[kNumSpeakers] = {
        {0.35, 0.45, 0.97}, {0.55, 0.65, 1.00}, {0.80, 0.85, 1.03}, {1.00, 1.05, 1.06}};
    return profiles[s];
}

}  // namespace synth_detail

struct SynthUtterance {
    std::string id;
    Waveform audio;
    std::vector<AlignmentTier> tiers;  // word + phone
    long speaker = 0;
};

inline SynthUtterance synth_utterance(const SynthCorpusSpec& spec, long index) {
    using namespace synth_detail;
    Rng rng(spec.seed * 0x9E3779B97F4A7C15ull + (std::uint64_t)index);
    SynthUtterance utt;
    utt.id = (index < 10 ? "utt00" : (index < 100 ? "utt0" : "utt")) + std::to_string(index);
    utt.speaker = index % kNumSpeakers;
    const Speaker spk = speaker_profile(utt.speaker);

    const long n_words = spec.words_min + rng.uniform_int(spec.words_max - spec.words_min + 1);
    AlignmentTier words{TierKind::word, {}};
    AlignmentTier phones{TierKind::phone, {}};
    std::vector<real> samples;
    const real sr = (real)spec.sample_rate;
    auto emit_silence = [&](real seconds) {
        const long n = (long)std::llround(seconds * sr);
        for (long i = 0; i < n; ++i) samples.push_back(spec.noise * rng.normal());
    };

    emit_silence(0.08 + rng.uniform(0.0, 0.04));
    for (long w = 0; w < n_words; ++w) {
        const long word = rng.uniform_int(kNumWords);
        const real word_start = (real)samples.size() / sr;
        for (long pi = 0; pi < 3; ++pi) {
            const long ph = word_phonemes(word)[pi];
            const real dur = 0.08 + rng.uniform(0.0, 0.06);
            const long n = (long)std::llround(dur * sr);
            const real start = (real)samples.size() / sr;
            const real f0 = phoneme_freq(ph) * spk.detune;
            const real phase0 = rng.uniform(0.0, 6.28318530717958647692);
            for (long i = 0; i < n; ++i) {
                const real t = (real)i / sr;
                real v = 0.0;
                real amp = 1.0;
                for (long h = 1; h <= 3; ++h) {
                    const real fh = f0 * (real)h;
                    if (fh < sr / 2.0 * 0.95)
                        v += amp * std::sin(2.0 * 3.14159265358979323846 * fh * t + phase0 * h);
                    amp *= spk.tilt;
                }
                // short fade at both edges to avoid clicks
                const real edge = std::min({1.0, (real)i / (0.005 * sr),
                                            (real)(n - 1 - i) / (0.005 * sr)});
                samples.push_back(std::clamp(
                    0.25 * spk.gain * v * std::max(edge, 0.0) + spec.noise * rng.normal(), -1.0,
                    1.0));
            }
            phones.intervals.push_back({start, (real)samples.size() / sr, phoneme_label(ph)});
        }
        words.intervals.push_back({word_start, (real)samples.size() / sr, word_label(word)});
        emit_silence(0.06 + rng.uniform(0.0, 0.06));
    }
    emit_silence(0.06);

    utt.audio.sample_rate = spec.sample_rate;
    utt.audio.samples = std::move(samples);
    utt.tiers = {words, phones};
    return utt;
}

// Frame-level noisy one-hot phoneme teacher (one extra dimension for silence).
inline TeacherEmbeddings synth_phonetic_teacher(const SynthUtterance& utt,
                                                const SynthCorpusSpec& spec) {
    using namespace synth_detail;
    const long frames = utt.audio.size() / spec.hop;
    const real frame_rate = (real)spec.sample_rate / (real)spec.hop;
    const AlignmentTier* phones = find_tier(utt.tiers, TierKind::phone);
    check(phones != nullptr, "synth corpus: utterance has no phone tier");
    std::vector<std::string> labels = align_to_frames(*phones, frame_rate, frames);
    Rng rng(spec.seed ^ fnv1a64(utt.id));
    TeacherEmbeddings t;
    t.granularity = Granularity::frame;
    t.dim = kNumPhonemes + 1;
    t.values = Mat(frames, t.dim);
    for (long f = 0; f < frames; ++f) {
        long hot = kNumPhonemes;  // silence slot
        if (labels[(size_t)f] != kSilenceLabel)
            hot = std::stol(labels[(size_t)f].substr(1));
        for (long d = 0; d < t.dim; ++d)
            t.values.at(f, d) = (d == hot ? 1.0 : 0.0) + spec.teacher_noise * rng.normal();
    }
    t.frame_rate_num = spec.sample_rate;
    t.frame_rate_den = spec.hop;
    t.validate();
    return t;
}

// Writes wav/, ali/, teacher_phn/ (and optionally teacher_lex/) under root.
inline void generate_synth_corpus(const std::string& root, const SynthCorpusSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(root) / "wav");
    fs::create_directories(fs::path(root) / "ali");
    fs::create_directories(fs::path(root) / "teacher_phn");
    if (spec.write_lexical_files) fs::create_directories(fs::path(root) / "teacher_lex");
    for (long i = 0; i < spec.utterances; ++i) {
        SynthUtterance utt = synth_utterance(spec, i);
        write_wav((fs::path(root) / "wav" / (utt.id + ".wav")).string(), utt.audio);
        write_alignment((fs::path(root) / "ali" / (utt.id + ".ali")).string(), utt.tiers);
        write_teacher_embeddings(synth_phonetic_teacher(utt, spec),
                                 (fs::path(root) / "teacher_phn" / (utt.id + ".hte")).string());
        if (spec.write_lexical_files) {
            const AlignmentTier* words = find_tier(utt.tiers, TierKind::word);
            write_teacher_embeddings(
                mock_lexical_teacher(*words, spec.seed, spec.lexical_dim),
                (fs::path(root) / "teacher_lex" / (utt.id + ".hte")).string());
        }
    }
}

}  // namespace hac
