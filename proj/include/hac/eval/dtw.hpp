#pragma once

#include "hac/audio/spectrogram.hpp"

namespace hac {

enum class FrameMetric { angular, euclidean };

inline FrameMetric frame_metric_from(const std::string& s) {
    if (s == "angular") return FrameMetric::angular;
    if (s == "euclidean") return FrameMetric::euclidean;
    throw Error("frame metric must be angular or euclidean, got '" + s + "'");
}

inline real frame_distance(const real* a, const real* b, long d, FrameMetric m) {
    bool identical = true;
    for (long i = 0; i < d && identical; ++i) identical = a[i] == b[i];
    if (identical) return 0.0;
    if (m == FrameMetric::euclidean) {
        real acc = 0;
        for (long i = 0; i < d; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(acc);
    }
    real aa = 0, bb = 0, ab = 0;
    for (long i = 0; i < d; ++i) {
        aa += a[i] * a[i];
        bb += b[i] * b[i];
        ab += a[i] * b[i];
    }
    if (aa <= 0 || bb <= 0) return 0.5;  // zero frames sit at a right angle
    const real c = std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
    return std::acos(c) / 3.14159265358979323846;
}

// Dynamic time warping with steps (1,0), (0,1), (1,1): minimizes the summed
// frame distance, then path length on ties, and reports sum / length.
inline real dtw_distance(const Mat& a, const Mat& b, FrameMetric metric) {
    check(a.rows >= 1 && b.rows >= 1, "dtw: empty sequence");
    check(a.cols == b.cols, "dtw: feature dim mismatch");
    const long n = a.rows, m = b.rows;
    std::vector<real> sum((size_t)(n * m), 0.0);
    std::vector<long> len((size_t)(n * m), 0);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < m; ++j) {
            const real d = frame_distance(a.row(i), b.row(j), a.cols, metric);
            const size_t k = (size_t)(i * m + j);
            if (i == 0 && j == 0) {
                sum[k] = d;
                len[k] = 1;
                continue;
            }
            real best_sum = 1e300;
            long best_len = 0;
            auto consider = [&](long pi, long pj) {
                if (pi < 0 || pj < 0) return;
                const size_t pk = (size_t)(pi * m + pj);
                if (sum[pk] < best_sum || (sum[pk] == best_sum && len[pk] < best_len)) {
                    best_sum = sum[pk];
                    best_len = len[pk];
                }
            };
            consider(i - 1, j - 1);
            consider(i - 1, j);
            consider(i, j - 1);
            sum[k] = best_sum + d;
            len[k] = best_len + 1;
        }
    }
    return sum[(size_t)(n * m - 1)] / (real)len[(size_t)(n * m - 1)];
}

}  // namespace hac
