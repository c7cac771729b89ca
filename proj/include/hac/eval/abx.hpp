#pragma once

#include <map>

#include "hac/eval/dtw.hpp"

namespace hac {

struct AbxItem {
    Mat features;          // F x d
    std::string category;  // phone (context-independent) or triphone (context-dependent)
    std::string speaker;
};

enum class AbxPairing { within_speaker, across_speaker };

inline AbxPairing abx_pairing_from(const std::string& s) {
    if (s == "within_speaker") return AbxPairing::within_speaker;
    if (s == "across_speaker") return AbxPairing::across_speaker;
    throw Error("abx pairing must be within_speaker or across_speaker, got '" + s + "'");
}

// Discrimination error: over triples (A, B, X) with X and A sharing a
// category distinct from B's, score 1 when X lies closer to B, 0.5 on ties.
// Triple scores average within each ordered category pair; ordered-direction
// means are averaged into a symmetric pair error, and pairs average into the
// final rate. Speaker handling: within pairing keeps A, B, X on one speaker;
// across pairing keeps A, B on one speaker and X on a different one.
inline real abx_error(const std::vector<AbxItem>& items, AbxPairing pairing,
                      FrameMetric metric = FrameMetric::angular) {
    check(items.size() >= 3, "abx: need at least three items");
    const long n = (long)items.size();

    // all pairwise distances up front; triples reuse them
    std::vector<real> dist((size_t)(n * n), 0.0);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) {
            const real d = dtw_distance(items[(size_t)i].features, items[(size_t)j].features,
                                        metric);
            dist[(size_t)(i * n + j)] = d;
            dist[(size_t)(j * n + i)] = d;
        }

    std::vector<std::string> cats;
    for (const auto& it : items) cats.push_back(it.category);
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    check(cats.size() >= 2, "abx: need at least two categories");

    auto speakers_ok = [&](long a, long b, long x) {
        if (pairing == AbxPairing::within_speaker)
            return items[(size_t)a].speaker == items[(size_t)b].speaker &&
                   items[(size_t)a].speaker == items[(size_t)x].speaker;
        return items[(size_t)a].speaker == items[(size_t)b].speaker &&
               items[(size_t)a].speaker != items[(size_t)x].speaker;
    };

    // ordered-direction mean for (target, other)
    auto direction_error = [&](const std::string& target, const std::string& other,
                               bool& defined) {
        real acc = 0.0;
        long count = 0;
        for (long a = 0; a < n; ++a) {
            if (items[(size_t)a].category != target) continue;
            for (long b = 0; b < n; ++b) {
                if (items[(size_t)b].category != other) continue;
                for (long x = 0; x < n; ++x) {
                    if (x == a || items[(size_t)x].category != target) continue;
                    if (!speakers_ok(a, b, x)) continue;
                    const real dxa = dist[(size_t)(x * n + a)];
                    const real dxb = dist[(size_t)(x * n + b)];
                    acc += dxb < dxa ? 1.0 : (dxb == dxa ? 0.5 : 0.0);
                    ++count;
                }
            }
        }
        defined = count > 0;
        return defined ? acc / (real)count : 0.0;
    };

    real total = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < cats.size(); ++i) {
        for (size_t j = i + 1; j < cats.size(); ++j) {
            bool d1 = false, d2 = false;
            const real e1 = direction_error(cats[i], cats[j], d1);
            const real e2 = direction_error(cats[j], cats[i], d2);
            if (!d1 && !d2) continue;
            const real pair_err = d1 && d2 ? (e1 + e2) / 2.0 : (d1 ? e1 : e2);
            total += pair_err;
            ++pairs;
        }
    }
    check(pairs > 0, "abx: no scorable category pair under this pairing");
    return total / (real)pairs;
}

// One-hot frame features for token-based discrimination.
inline Mat onehot_features(const std::vector<long>& codes, long k) {
    Mat out((long)codes.size(), k);
    for (size_t i = 0; i < codes.size(); ++i) {
        check(0 <= codes[i] && codes[i] < k, "onehot: code out of range");
        out.at((long)i, codes[i]) = 1.0;
    }
    return out;
}

}  // namespace hac
