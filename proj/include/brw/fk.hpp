#pragma once

#include "brw/exact.hpp"
#include "brw/model.hpp"

#include <vector>

namespace brw {

// One sample path of an auxiliary single-particle walk, with its exact
// probability. sites[0] is the start, sites has m+1 entries after m steps.
struct WalkPathQ {
    std::vector<int> sites;
    Rational prob;
};

// Exhaustive enumeration of every m-step path of the walk with step law
// `law` started at x0. Throws ResourceError once more than `budget` path
// nodes would be expanded.
std::vector<WalkPathQ> enumerate_paths(const StepLawQ& law, int x0, int m,
                                       long long budget = 10'000'000);

// Discrete Girsanov trace along one walk path: the process
//   Y_k = mean^k w_{m-k}(W_k) 1{tau >= k} prod_{j<=k} (1 - H(w_{m-j}(W_j)))
//       + sum_{i<k} mean^{i-1} (1-p0) 1{tau = i} prod_{j<i} (1 - H(w_{m-j}(W_j)))
// where tau is the first index with W <= 0, mean = 1 + theta/n, and w is the
// single-particle tail table. Y freezes at the absorbed value once the path
// crosses 0, and Y_0 = w_m(x0). Returns Y_0..Y_K for a K-step path.
std::vector<Rational> y_trace(const BrwParamsQ& params, const TailTableQ& w,
                              const std::vector<int>& sites, int m);

struct MartingaleCheckQ {
    Rational reference;                  // w_m(x0)
    std::vector<Rational> expectations;  // E[Y_k] for k = 0..m
    Rational max_error;                  // max_k |E[Y_k] - w_m(x0)|
    bool exact = false;
};

// Verifies E[Y_k] = w_m(x0) for every k = 0..m by exhaustive path
// enumeration in rational arithmetic. exact == true means the equality holds
// with zero error.
MartingaleCheckQ check_martingale(const BrwParamsQ& params, int x0, int m,
                                  long long budget = 10'000'000);

struct FkCheckQ {
    Rational reference;  // w_m(x)
    Rational value;      // stopped path expectation
    bool exact = false;
};

// Stopped-path representation of the tail: for the walk started at x,
// stopped at T = min(first exit from (y, z), horizon),
//   w_m(x) = E[ mean^T w_{m-T}(W_T) prod_{j<=T} (1 - H(w_{m-j}(W_j))) ].
// z < 0 means no upper barrier; horizon must lie in [0, m]. Evaluated
// exactly in rational arithmetic over the full path tree.
FkCheckQ fk_identity(const BrwParamsQ& params, int x, int m, int y, long long z,
                     int horizon, long long budget = 10'000'000);

}  // namespace brw
