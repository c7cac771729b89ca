#pragma once

#include "hac/audio/spectrogram.hpp"
#include "hac/core/binio.hpp"

namespace hac {

enum class Granularity : std::uint8_t { frame = 0, word = 1, utterance = 2 };

inline std::string granularity_name(Granularity g) {
    switch (g) {
        case Granularity::frame: return "frame";
        case Granularity::word: return "word";
        case Granularity::utterance: return "utterance";
    }
    return "?";
}

// Precomputed teacher representations: one row per frame, per word interval,
// or a single utterance-level row.
struct TeacherEmbeddings {
    Granularity granularity = Granularity::frame;
    long dim = 0;
    Mat values;                 // rows x dim
    long frame_rate_num = 0;    // native teacher frame rate, frame granularity only
    long frame_rate_den = 1;

    real frame_rate() const {
        return frame_rate_den > 0 ? (real)frame_rate_num / (real)frame_rate_den : 0.0;
    }

    void validate() const {
        check(dim > 0, "teacher embeddings: dim must be positive");
        check(values.cols == dim, "teacher embeddings: matrix width != dim");
        check(values.rows >= 1, "teacher embeddings: no rows");
        if (granularity == Granularity::utterance)
            check(values.rows == 1, "teacher embeddings: utterance granularity needs 1 row");
        if (granularity == Granularity::frame)
            check(frame_rate_num > 0 && frame_rate_den > 0,
                  "teacher embeddings: frame granularity needs a frame rate");
        for (long r = 0; r < values.rows; ++r)
            for (long c = 0; c < values.cols; ++c)
                check(std::isfinite(values.at(r, c)),
                      "teacher embeddings: non-finite value at row " + std::to_string(r) +
                          ", column " + std::to_string(c));
    }
};

namespace teacher_detail {
inline constexpr char kMagic[4] = {'H', 'A', 'C', 'E'};
inline constexpr std::uint16_t kVersion = 1;
}  // namespace teacher_detail

inline void write_teacher_embeddings(const TeacherEmbeddings& t, const std::string& path) {
    t.validate();
    BinWriter w(path);
    w.bytes(teacher_detail::kMagic, 4);
    w.u16(teacher_detail::kVersion);
    w.u8((std::uint8_t)t.granularity);
    w.u32((std::uint32_t)t.dim);
    w.u32((std::uint32_t)t.values.rows);
    w.u32((std::uint32_t)t.frame_rate_num);
    w.u32((std::uint32_t)t.frame_rate_den);
    for (real v : t.values.v) w.f64(v);
    w.close();
}

inline TeacherEmbeddings load_teacher_embeddings(const std::string& path) {
    BinReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    check(std::memcmp(magic, teacher_detail::kMagic, 4) == 0,
          "not a teacher embedding file: " + path);
    const std::uint16_t version = r.u16();
    check(version == teacher_detail::kVersion,
          "teacher file version mismatch: got " + std::to_string(version) + ": " + path);
    TeacherEmbeddings t;
    const std::uint8_t g = r.u8();
    check(g <= 2, "teacher file: bad granularity tag: " + path);
    t.granularity = (Granularity)g;
    t.dim = (long)r.u32();
    const long rows = (long)r.u32();
    t.frame_rate_num = (long)r.u32();
    t.frame_rate_den = (long)r.u32();
    check(t.dim > 0 && rows > 0, "teacher file: bad dimensions in header: " + path);
    t.values = Mat(rows, t.dim);
    for (long i = 0; i < rows * t.dim; ++i) {
        if (r.at_eof())
            throw Error("teacher file: payload shorter than declared " + std::to_string(rows) +
                        "x" + std::to_string(t.dim) + " header: " + path);
        t.values.v[(size_t)i] = r.f64();
    }
    for (long row = 0; row < rows; ++row)
        for (long col = 0; col < t.dim; ++col)
            check(std::isfinite(t.values.at(row, col)),
                  "teacher file: non-finite value at row " + std::to_string(row) + ", column " +
                      std::to_string(col) + ": " + path);
    t.validate();
    return t;
}

// Nearest-row resampling of a frame-granularity teacher onto target_frames at
// target_rate; truncation ties resolve toward the earlier frame.
inline Mat resample_teacher_frames(const TeacherEmbeddings& t, long target_frames,
                                   real target_rate) {
    check(t.granularity == Granularity::frame, "resample_teacher_frames: frame granularity only");
    check(target_frames >= 1 && target_rate > 0, "resample_teacher_frames: bad target");
    if (t.values.rows == target_frames && std::abs(t.frame_rate() - target_rate) < 1e-9)
        return t.values;
    Mat out(target_frames, t.dim);
    const real src_rate = t.frame_rate();
    for (long f = 0; f < target_frames; ++f) {
        const real center = ((real)f + 0.5) / target_rate;
        long src = (long)(center * src_rate);  // truncate: ties go to the earlier frame
        src = std::clamp<long>(src, 0, t.values.rows - 1);
        std::copy(t.values.row(src), t.values.row(src) + t.dim, out.row(f));
    }
    return out;
}

}  // namespace hac
