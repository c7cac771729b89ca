#pragma once

#include <map>

#include "hac/data/alignment.hpp"

namespace hac {

// Plug-in mutual information between two label sequences normalized by the
// entropy of the first: I(Y;Q) / H(Y). Counts pool over everything passed in.
class PnmiCounter {
public:
    void add(const std::string& phone, long token) {
        ++joint_[{phone, token}];
        ++total_;
    }

    // silence frames never enter the counts
    void add_frames(const std::vector<std::string>& phones, const std::vector<long>& tokens) {
        check(phones.size() == tokens.size(), "pnmi: label/token length mismatch");
        for (size_t i = 0; i < phones.size(); ++i)
            if (phones[i] != kSilenceLabel) add(phones[i], tokens[i]);
    }

    long total() const { return total_; }

    real value() const {
        check(total_ > 0, "pnmi: no labeled frames (all frames silent?)");
        std::map<std::string, long> py;
        std::map<long, long> pq;
        for (const auto& [key, c] : joint_) {
            py[key.first] += c;
            pq[key.second] += c;
        }
        const real n = (real)total_;
        real h_y = 0.0;
        for (const auto& [label, c] : py) {
            const real p = (real)c / n;
            h_y -= p * std::log(p);
        }
        if (h_y <= 0.0) return 0.0;
        real mi = 0.0;
        for (const auto& [key, c] : joint_) {
            const real pxy = (real)c / n;
            const real p1 = (real)py.at(key.first) / n;
            const real p2 = (real)pq.at(key.second) / n;
            mi += pxy * std::log(pxy / (p1 * p2));
        }
        return mi / h_y;
    }

private:
    std::map<std::pair<std::string, long>, long> joint_;
    long total_ = 0;
};

inline real pnmi(const std::vector<std::string>& phone_labels, const std::vector<long>& tokens) {
    PnmiCounter c;
    c.add_frames(phone_labels, tokens);
    return c.value();
}

// direct form over a counts table (rows = phoneme labels, cols = tokens)
inline real pnmi_from_counts(const Mat& counts) {
    PnmiCounter c;
    for (long y = 0; y < counts.rows; ++y)
        for (long q = 0; q < counts.cols; ++q) {
            const long k = (long)std::llround(counts.at(y, q));
            for (long i = 0; i < k; ++i) c.add("y" + std::to_string(y), q);
        }
    return c.value();
}

}  // namespace hac
