#pragma once

#include <fstream>
#include <sstream>

#include "hac/core/tensor.hpp"

namespace hac {

inline const std::string kSilenceLabel = "<sil>";

enum class TierKind { word, phone };

inline std::string tier_kind_name(TierKind k) { return k == TierKind::word ? "word" : "phone"; }

struct Interval {
    real start = 0.0;
    real end = 0.0;
    std::string label;
};

// One tier of a forced alignment: ordered, non-overlapping, labeled spans.
struct AlignmentTier {
    TierKind kind = TierKind::word;
    std::vector<Interval> intervals;

    void validate(const std::string& where = "") const {
        for (size_t i = 0; i < intervals.size(); ++i) {
            const auto& iv = intervals[i];
            check(iv.start < iv.end, "alignment" + where + ": interval with start >= end at " +
                                         std::to_string(iv.start) + "s");
            check(!iv.label.empty(), "alignment" + where + ": empty label at " +
                                         std::to_string(iv.start) + "s");
            if (i > 0)
                check(intervals[i - 1].end <= iv.start + 1e-12,
                      "alignment" + where + ": overlap at " + std::to_string(iv.start) + "s");
        }
    }
};

// Text format, one tier per `tier <name>` block, one `start end label` line
// per interval, `#` comments. Unknown tier names are skipped with a warning.
inline std::vector<AlignmentTier> parse_alignment(const std::string& path,
                                                  std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    check(in.good(), "missing alignment file: " + path);
    std::vector<AlignmentTier> tiers;
    bool skipping = false;
    AlignmentTier* cur = nullptr;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "tier") {
            std::string name;
            check((bool)(ls >> name), path + ":" + std::to_string(lineno) + ": tier without a name");
            if (name == "word" || name == "phone") {
                tiers.push_back(AlignmentTier{name == "word" ? TierKind::word : TierKind::phone, {}});
                cur = &tiers.back();
                skipping = false;
            } else {
                if (warnings)
                    warnings->push_back(path + ":" + std::to_string(lineno) +
                                        ": skipping unknown tier '" + name + "'");
                cur = nullptr;
                skipping = true;
            }
            continue;
        }
        if (skipping) continue;
        check(cur != nullptr, path + ":" + std::to_string(lineno) + ": interval before any tier");
        Interval iv;
        std::istringstream is(line);
        check((bool)(is >> iv.start >> iv.end >> iv.label),
              path + ":" + std::to_string(lineno) + ": expected 'start end label'");
        check(iv.start < iv.end,
              path + ":" + std::to_string(lineno) + ": start >= end");
        if (!cur->intervals.empty() && cur->intervals.back().end > iv.start + 1e-12)
            throw Error(path + ":" + std::to_string(lineno) + ": overlap at " +
                        std::to_string(iv.start) + "s");
        cur->intervals.push_back(std::move(iv));
    }
    for (auto& t : tiers) t.validate(" (" + path + ")");
    return tiers;
}

inline void write_alignment(const std::string& path, const std::vector<AlignmentTier>& tiers) {
    std::ofstream out(path);
    check(out.good(), "cannot open for writing: " + path);
    out.precision(6);
    out << std::fixed;
    for (const auto& t : tiers) {
        out << "tier " << tier_kind_name(t.kind) << "\n";
        for (const auto& iv : t.intervals)
            out << iv.start << " " << iv.end << " " << iv.label << "\n";
    }
    out.close();
    check(out.good(), "write failed: " + path);
}

inline const AlignmentTier* find_tier(const std::vector<AlignmentTier>& tiers, TierKind kind) {
    for (const auto& t : tiers)
        if (t.kind == kind) return &t;
    return nullptr;
}

// Frame f takes the label of the interval containing its center time
// (f + 0.5) / frame_rate; uncovered frames get the silence label.
inline std::vector<std::string> align_to_frames(const AlignmentTier& tier, real frame_rate,
                                                long num_frames) {
    check(frame_rate > 0.0, "align_to_frames: frame rate must be positive");
    check(num_frames >= 1, "align_to_frames: need at least one frame");
    std::vector<std::string> labels((size_t)num_frames, kSilenceLabel);
    size_t j = 0;
    for (long f = 0; f < num_frames; ++f) {
        const real t = ((real)f + 0.5) / frame_rate;
        while (j < tier.intervals.size() && tier.intervals[j].end <= t) ++j;
        if (j < tier.intervals.size() && tier.intervals[j].start <= t && t < tier.intervals[j].end)
            labels[(size_t)f] = tier.intervals[j].label;
    }
    return labels;
}

// Index of the interval containing the frame center, or -1 for silence.
inline std::vector<long> frame_interval_indices(const AlignmentTier& tier, real frame_rate,
                                                long num_frames) {
    check(frame_rate > 0.0, "frame_interval_indices: frame rate must be positive");
    check(num_frames >= 1, "frame_interval_indices: need at least one frame");
    std::vector<long> idx((size_t)num_frames, -1);
    size_t j = 0;
    for (long f = 0; f < num_frames; ++f) {
        const real t = ((real)f + 0.5) / frame_rate;
        while (j < tier.intervals.size() && tier.intervals[j].end <= t) ++j;
        if (j < tier.intervals.size() && tier.intervals[j].start <= t && t < tier.intervals[j].end)
            idx[(size_t)f] = (long)j;
    }
    return idx;
}

}  // namespace hac
