#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace brw {

// Sums v[lo, hi) by recursive halving. The result depends only on the values
// and their order, never on how work was split across threads, so parallel
// aggregations that store per-slot partials and then call this are
// bit-reproducible for any thread count.
inline double pairwise_sum(const double* v, std::size_t lo, std::size_t hi) {
    const std::size_t len = hi - lo;
    if (len <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + len / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), 0, v.size());
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Mean and standard error (sample sd / sqrt(n)) via pairwise sums.
inline MeanStderr mean_stderr(const std::vector<double>& v) {
    MeanStderr out;
    const std::size_t n = v.size();
    if (n == 0) return out;
    out.mean = pairwise_sum(v) / static_cast<double>(n);
    if (n < 2) return out;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(n));
    return out;
}

}  // namespace brw
