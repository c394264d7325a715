#pragma once

#include "brw/io.hpp"
#include "brw/model.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace brw {

// Tail probabilities w_k(x) = P(max displacement through generation k >= x)
// for a single initial particle, on the grid 1 <= x <= x_max, 0 <= k <= k_max.
// Values at x <= 0 are identically 1 (the origin already counts), values at
// x > range*k are identically 0 (the walk moves at most `range` per step).
template <class S>
struct TailTableT {
    BrwParamsT<S> params;
    int k_max = 0;
    int x_max = 0;
    std::vector<std::vector<S>> rows;  // rows[k][x-1]

    S at(int k, int x) const {
        if (x <= 0) return S(1);
        if (x > x_max) {
            if (static_cast<long long>(x) >
                static_cast<long long>(params.step.range) * k)
                return S(0);
            throw std::out_of_range("TailTable::at: site beyond stored width");
        }
        return rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(x - 1)];
    }
};

template <class S>
struct TailFixedPointT {
    BrwParamsT<S> params;
    int x_max = 0;
    std::vector<S> values;  // values[x-1] = w_inf(x)
    long long iterations = 0;
    double residual = 0.0;  // sup-norm change at the last iteration
    bool converged = false;
    int window = 0;  // iteration width actually used

    S at(int x) const {
        if (x <= 0) return S(1);
        if (x > x_max)
            throw std::out_of_range("TailFixedPoint::at: site beyond stored width");
        return values[static_cast<std::size_t>(x - 1)];
    }
};

using TailTable = TailTableT<double>;
using TailTableQ = TailTableT<Rational>;
using TailFixedPoint = TailFixedPointT<double>;
using TailFixedPointQ = TailFixedPointT<Rational>;

namespace detail {
// prev is a row over x = 1..len; x <= 0 reads as 1, x > len as 0.
template <class S>
inline S row_at(const std::vector<S>& prev, long long x) {
    if (x <= 0) return S(1);
    if (x > static_cast<long long>(prev.size())) return S(0);
    return prev[static_cast<std::size_t>(x - 1)];
}

template <class S>
inline S w_entry(const std::vector<S>& prev, const BrwParamsT<S>& params,
                 long long x) {
    S acc = 0;
    for (const auto& [y, a] : params.step.probs)
        acc += a * q_fn(params.offspring, row_at(prev, x - y));
    return acc;
}
}  // namespace detail

// One application of the convolution recursion
//   w_k(x) = sum_y a_y Q(w_{k-1}(x - y)).
// Serial reference implementation.
template <class S>
void w_step_serial(const std::vector<S>& prev, const BrwParamsT<S>& params,
                   std::vector<S>& next) {
    const long long len = static_cast<long long>(next.size());
    for (long long x = 1; x <= len; ++x)
        next[static_cast<std::size_t>(x - 1)] = detail::w_entry(prev, params, x);
}

// OpenMP kernel. Each site is independent and computed with the identical
// arithmetic path, so output is bit-identical to the serial version for any
// thread count.
template <class S>
void w_step_parallel(const std::vector<S>& prev, const BrwParamsT<S>& params,
                     std::vector<S>& next) {
    const long long len = static_cast<long long>(next.size());
#pragma omp parallel for schedule(static)
    for (long long x = 1; x <= len; ++x)
        next[static_cast<std::size_t>(x - 1)] = detail::w_entry(prev, params, x);
}

template <class S>
std::vector<S> w_step(const std::vector<S>& prev, const BrwParamsT<S>& params) {
    std::vector<S> next(prev.size());
    w_step_parallel(prev, params, next);
    return next;
}

inline constexpr std::uint64_t kDefaultTableBudgetBytes = 2ull << 30;

// Full table of rows 0..k_max on x = 1..x_max. Rows are computed on the
// widened window x_max + range*k_max so every returned entry is exact (the
// dependence cone of (k, x <= x_max) never leaves the window).
template <class S>
TailTableT<S> w_table(const BrwParamsT<S>& params, int k_max, int x_max,
                      std::uint64_t budget_bytes = kDefaultTableBudgetBytes) {
    if (k_max < 0 || x_max < 1)
        throw std::invalid_argument("w_table: need k_max >= 0, x_max >= 1");
    const std::uint64_t window =
        static_cast<std::uint64_t>(x_max) +
        static_cast<std::uint64_t>(params.step.range) * static_cast<std::uint64_t>(k_max);
    const std::uint64_t need =
        (static_cast<std::uint64_t>(k_max) + 1) * static_cast<std::uint64_t>(x_max) *
            sizeof(S) +
        2 * window * sizeof(S);
    if (need > budget_bytes)
        throw ResourceError("w_table: " + std::to_string(need) +
                            " bytes exceeds budget");

    TailTableT<S> table;
    table.params = params;
    table.k_max = k_max;
    table.x_max = x_max;
    table.rows.assign(static_cast<std::size_t>(k_max) + 1,
                      std::vector<S>(static_cast<std::size_t>(x_max), S(0)));

    std::vector<S> cur(static_cast<std::size_t>(window), S(0));
    std::vector<S> next(static_cast<std::size_t>(window), S(0));
    for (int k = 1; k <= k_max; ++k) {
        w_step_parallel(cur, params, next);
        std::swap(cur, next);
        for (int x = 1; x <= x_max; ++x)
            table.rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(x - 1)] =
                cur[static_cast<std::size_t>(x - 1)];
    }
    return table;
}

// n-particle tail from the single-particle tail: u = 1 - (1-w)^n, evaluated
// through log1p/expm1 so n*w << 1 keeps full relative precision.
inline double u_from_w(double w, long long n) {
    if (n < 1) throw std::invalid_argument("u_from_w: n must be >= 1");
    if (w <= 0.0) return 0.0;
    if (w >= 1.0) return 1.0;
    return -std::expm1(static_cast<double>(n) * std::log1p(-w));
}

inline Rational u_from_w(const Rational& w, long long n) {
    if (n < 1) throw std::invalid_argument("u_from_w: n must be >= 1");
    return Rational(1) - rational_pow(Rational(1) - w, n);
}

// Iterates the recursion to the monotone limit w_inf = lim_k w_k.
// Iteration runs on a window wider than x_max; sites beyond the window are
// read as 0, which biases the result downward by at most w_inf(window)
// (the window default keeps that below ~1% of w_inf(x_max)).
template <class S>
TailFixedPointT<S> w_infinity(const BrwParamsT<S>& params, int x_max, double tol,
                              long long k_cap = 0, int window_override = 0) {
    if (x_max < 1) throw std::invalid_argument("w_infinity: x_max >= 1");
    if (tol <= 0.0 && !is_rational_v<S>)
        throw std::invalid_argument("w_infinity: tol must be > 0");
    if (k_cap <= 0) k_cap = std::max<long long>(1000, 1000000 / x_max);

    int window = window_override;
    if (window <= 0) {
        const double theta = to_double(params.theta);
        if (theta != 0.0) {
            const double rate = std::sqrt(
                2.0 * std::abs(theta) /
                (to_double(params.step.variance) * static_cast<double>(params.n)));
            window = x_max + static_cast<int>(std::ceil(14.0 / rate));
        } else {
            window = 10 * x_max;
        }
    }

    std::vector<S> cur(static_cast<std::size_t>(window), S(0));
    std::vector<S> next(static_cast<std::size_t>(window), S(0));
    TailFixedPointT<S> fp;
    fp.params = params;
    fp.x_max = x_max;
    fp.window = window;
    for (long long k = 1; k <= k_cap; ++k) {
        w_step_parallel(cur, params, next);
        double resid = 0.0;
        bool identical = true;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if constexpr (is_rational_v<S>) {
                if (next[i] != cur[i]) identical = false;
            } else {
                resid = std::max(resid, next[i] - cur[i]);  // monotone increase
                if (next[i] != cur[i]) identical = false;
            }
        }
        std::swap(cur, next);
        fp.iterations = k;
        fp.residual = resid;
        if constexpr (is_rational_v<S>) {
            if (identical) {
                fp.converged = true;
                break;
            }
        } else {
            if (identical || resid < tol) {
                fp.converged = true;
                break;
            }
        }
    }
    fp.values.assign(cur.begin(), cur.begin() + x_max);
    return fp;
}

// CSV exports: header row, 17 significant digits, u computed for params.n.
std::string table_to_csv(const TailTable& table);
std::string fixed_point_to_csv(const TailFixedPoint& fp);

}  // namespace brw
