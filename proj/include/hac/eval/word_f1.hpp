#pragma once

#include <map>
#include <set>

#include "hac/data/alignment.hpp"

namespace hac {

struct WordDetectorRow {
    std::string word;
    long token = 0;
    real precision = 0.0;
    real recall = 0.0;
    real f1 = 0.0;
    long word_occurrences = 0;    // occurrences of the word in the corpus
    long hits = 0;                // occurrences containing at least one run of the token
    long runs_on_word = 0;        // runs of the token assigned to this word
    long runs_assigned = 0;       // runs of the token assigned to any word
};

struct WordDetectorResult {
    std::vector<WordDetectorRow> table;                // support > 0 pairs only
    std::vector<std::pair<real, long>> curve;          // threshold -> tokens at/above it
    std::map<long, real> best_f1_per_token;
};

struct UtteranceTokens {
    std::vector<long> codes;   // one layer, one code per frame
    AlignmentTier words;       // word tier for the same utterance
};

// Token occurrences are maximal runs of one code. A run belongs to the word
// occurrence covering the majority of its frames (earlier interval on ties);
// runs with a strict silence majority stay unassigned. Precision and recall
// then count runs against word occurrences corpus-wide.
inline WordDetectorResult word_detector_f1(const std::vector<UtteranceTokens>& utterances,
                                           real frame_rate,
                                           real threshold_start = 0.05,
                                           real threshold_stop = 0.95,
                                           real threshold_step = 0.05) {
    check(!utterances.empty(), "word detector: no utterances");
    check(frame_rate > 0, "word detector: frame rate must be positive");

    // occurrence bookkeeping: (utterance, interval index) identifies one
    // word occurrence; label lookup comes from the tier
    std::map<std::string, long> word_occurrences;
    std::map<std::pair<std::string, long>, std::set<std::pair<long, long>>> hit_occurrences;
    std::map<std::pair<std::string, long>, long> runs_on_word;
    std::map<long, long> runs_assigned;

    for (size_t ui = 0; ui < utterances.size(); ++ui) {
        const auto& utt = utterances[ui];
        check(!utt.codes.empty(), "word detector: empty code sequence");
        for (const auto& iv : utt.words.intervals) ++word_occurrences[iv.label];
        const std::vector<long> frame_iv =
            frame_interval_indices(utt.words, frame_rate, (long)utt.codes.size());

        size_t start = 0;
        while (start < utt.codes.size()) {
            size_t stop = start;
            while (stop < utt.codes.size() && utt.codes[stop] == utt.codes[start]) ++stop;
            // majority interval for this run
            std::map<long, long> counts;
            for (size_t f = start; f < stop; ++f) ++counts[frame_iv[f]];
            long best_iv = -1, best_count = 0, silence = 0;
            for (const auto& [iv, c] : counts) {
                if (iv < 0) silence = c;
                else if (c > best_count || (c == best_count && iv < best_iv) || best_iv < 0) {
                    best_iv = iv;
                    best_count = c;
                }
            }
            if (best_iv >= 0 && silence <= best_count) {
                const long token = utt.codes[start];
                const std::string& word = utt.words.intervals[(size_t)best_iv].label;
                ++runs_on_word[{word, token}];
                ++runs_assigned[token];
                hit_occurrences[{word, token}].insert({(long)ui, best_iv});
            }
            start = stop;
        }
    }

    WordDetectorResult out;
    for (const auto& [key, n_runs] : runs_on_word) {
        const auto& [word, token] = key;
        WordDetectorRow row;
        row.word = word;
        row.token = token;
        row.word_occurrences = word_occurrences.at(word);
        row.hits = (long)hit_occurrences.at(key).size();
        row.runs_on_word = n_runs;
        row.runs_assigned = runs_assigned.at(token);
        row.recall = (real)row.hits / (real)row.word_occurrences;
        row.precision = (real)row.runs_on_word / (real)row.runs_assigned;
        row.f1 = row.precision + row.recall > 0
                     ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                     : 0.0;
        out.table.push_back(row);
        auto it = out.best_f1_per_token.find(token);
        if (it == out.best_f1_per_token.end() || row.f1 > it->second)
            out.best_f1_per_token[token] = row.f1;
    }

    for (real tau = threshold_start; tau <= threshold_stop + 1e-9; tau += threshold_step) {
        long count = 0;
        for (const auto& [token, f1] : out.best_f1_per_token)
            if (f1 >= tau - 1e-12) ++count;
        out.curve.emplace_back(tau, count);
    }
    return out;
}

inline long detectors_at(const WordDetectorResult& r, real tau) {
    long count = 0;
    for (const auto& [token, f1] : r.best_f1_per_token)
        if (f1 >= tau - 1e-12) ++count;
    return count;
}

}  // namespace hac
