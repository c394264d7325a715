#pragma once

#include "brw/rational.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace brw {

// Offspring distribution together with its first three moments.
// third_moment is the raw third moment E[xi^3].
template <class S>
struct OffspringLawT {
    std::vector<std::pair<int, S>> probs;  // ascending count, entries > 0
    S mean{};
    S variance{};
    S third_moment{};

    S p0() const {
        return (!probs.empty() && probs.front().first == 0) ? probs.front().second
                                                            : S(0);
    }
};

// Mean-zero jump distribution with bounded range.
template <class S>
struct StepLawT {
    std::vector<std::pair<int, S>> probs;  // ascending offset in [-range, range]
    int range = 0;
    S variance{};
    bool degenerate = false;  // single atom at 0; tolerated for trivial tests
};

template <class S>
struct BrwParamsT {
    long long n = 1;
    S theta{};
    OffspringLawT<S> offspring;  // mean 1 + theta/n
    StepLawT<S> step;

    S eta() const {
        if constexpr (is_rational_v<S>) return theta / S(n);
        else return theta / static_cast<double>(n);
    }
};

using OffspringLaw = OffspringLawT<double>;
using StepLaw = StepLawT<double>;
using BrwParams = BrwParamsT<double>;
using OffspringLawQ = OffspringLawT<Rational>;
using StepLawQ = StepLawT<Rational>;
using BrwParamsQ = BrwParamsT<Rational>;

namespace detail {
template <class S>
inline bool close(const S& a, const S& b) {
    if constexpr (is_rational_v<S>) return a == b;
    else return std::abs(a - b) <= 1e-12;
}
}  // namespace detail

template <class S>
OffspringLawT<S> make_offspring_law(std::vector<std::pair<int, S>> entries) {
    std::sort(entries.begin(), entries.end());
    OffspringLawT<S> law;
    S sum = 0, m1 = 0, m2 = 0, m3 = 0;
    for (auto& [i, p] : entries) {
        if (i < 0) throw std::invalid_argument("offspring count must be >= 0");
        if (p < S(0) || p > S(1))
            throw std::invalid_argument("offspring probability outside [0,1]");
        if (p == S(0)) continue;
        if (!law.probs.empty() && law.probs.back().first == i)
            throw std::invalid_argument("duplicate offspring count");
        law.probs.emplace_back(i, p);
        sum += p;
        m1 += S(i) * p;
        m2 += S(i) * S(i) * p;
        m3 += S(i) * S(i) * S(i) * p;
    }
    if (!detail::close(sum, S(1)))
        throw std::invalid_argument("offspring probabilities do not sum to 1");
    if (law.p0() <= S(0))
        throw std::invalid_argument("offspring law requires p0 > 0");
    law.mean = m1;
    law.variance = m2 - m1 * m1;
    law.third_moment = m3;
    return law;
}

template <class S>
StepLawT<S> make_step_law(std::vector<std::pair<int, S>> entries) {
    std::sort(entries.begin(), entries.end());
    StepLawT<S> law;
    S sum = 0, m1 = 0, m2 = 0;
    for (auto& [y, p] : entries) {
        if (p < S(0) || p > S(1))
            throw std::invalid_argument("step probability outside [0,1]");
        if (p == S(0)) continue;
        if (!law.probs.empty() && law.probs.back().first == y)
            throw std::invalid_argument("duplicate step offset");
        law.probs.emplace_back(y, p);
        sum += p;
        m1 += S(y) * p;
        m2 += S(y) * S(y) * p;
        law.range = std::max(law.range, std::abs(y));
    }
    if (!detail::close(sum, S(1)))
        throw std::invalid_argument("step probabilities do not sum to 1");
    if (!detail::close(m1, S(0)))
        throw std::invalid_argument("step law must have mean 0");
    law.variance = m2;
    law.degenerate = (law.probs.size() == 1);
    return law;
}

// The +-1 fair step; the workhorse instance of the test-suite.
template <class S>
StepLawT<S> simple_step() {
    if constexpr (is_rational_v<S>)
        return make_step_law<S>({{-1, Rational(1, 2)}, {1, Rational(1, 2)}});
    else
        return make_step_law<S>({{-1, 0.5}, {1, 0.5}});
}

// Offsets negated: the walk dual to the branching system's step law.
template <class S>
StepLawT<S> reflect(const StepLawT<S>& step) {
    std::vector<std::pair<int, S>> entries;
    entries.reserve(step.probs.size());
    for (const auto& [y, p] : step.probs) entries.emplace_back(-y, p);
    return make_step_law<S>(std::move(entries));
}

template <class S>
BrwParamsT<S> make_params(long long n, S theta, OffspringLawT<S> offspring,
                          StepLawT<S> step) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    BrwParamsT<S> p{n, std::move(theta), std::move(offspring), std::move(step)};
    const S want = S(1) + p.eta();
    if constexpr (is_rational_v<S>) {
        if (p.offspring.mean != want)
            throw std::invalid_argument("offspring mean != 1 + theta/n");
    } else {
        if (std::abs(p.offspring.mean - want) > 1e-12)
            throw std::invalid_argument("offspring mean != 1 + theta/n");
    }
    return p;
}

namespace detail {
template <class S>
inline void check_unit_interval(const S& s) {
    if (s < S(0) || s > S(1))
        throw std::domain_error("argument outside [0,1]");
}
}  // namespace detail

// f(s) = sum p_i s^i
template <class S>
S pgf(const OffspringLawT<S>& law, const S& s) {
    detail::check_unit_interval(s);
    S out = 0, power = 1;
    int at = 0;
    for (const auto& [i, p] : law.probs) {
        for (; at < i; ++at) power *= s;
        out += p * power;
    }
    return out;
}

// Q(s) = 1 - f(1-s); increasing and concave, Q(0)=0, Q(1)=1-p0.
template <class S>
S q_fn(const OffspringLawT<S>& law, const S& s) {
    detail::check_unit_interval(s);
    return S(1) - pgf(law, S(S(1) - s));
}

// h(s) = mean*s - Q(s) >= 0.
template <class S>
S h_fn(const OffspringLawT<S>& law, const S& s) {
    return law.mean * s - q_fn(law, s);
}

// H(s) = h(s) / (mean*s), extended by H(0) = 0. Nondecreasing on [0,1] with
// supremum H(1) = (mean - 1 + p0) / mean.
template <class S>
S H_fn(const OffspringLawT<S>& law, const S& s) {
    detail::check_unit_interval(s);
    if (s == S(0)) return S(0);
    return h_fn(law, s) / (law.mean * s);
}

template <class S>
S H_sup(const OffspringLawT<S>& law) {
    return (law.mean - S(1) + law.p0()) / law.mean;
}

// sigma_tilde^2 = variance + mean^2 - mean; the curvature constant in
// Q(s) = mean*s - (sigma_tilde^2/2) s^2 + O(s^3).
template <class S>
S sigma_tilde_sq(const OffspringLawT<S>& law) {
    return law.variance + law.mean * law.mean - law.mean;
}

// ---- concrete families, extinction, duality (double precision) ----------

// family: "binary" ({0,2}-valued) or "geometric-truncated" (tilted geometric,
// truncated at `cap` and renormalized). Mean is exactly 1 + theta/n.
OffspringLaw near_critical_family(const std::string& family, double theta,
                                  long long n, int cap = 20);

// Exact-rational binary member; the only family with rational closed form.
OffspringLawQ near_critical_family_exact(const std::string& family,
                                         const Rational& theta, long long n);

// Smallest root of f(q) = q in [0,1]; equals 1 iff mean <= 1.
double extinction_prob(const OffspringLaw& law, double tol = 1e-12);

// Subcritical dual with pgf f(s q)/q; requires mean > 1.
OffspringLaw dual_law(const OffspringLaw& law);

// ---- JSON round trip -----------------------------------------------------

std::string offspring_to_json(const OffspringLaw& law);
std::string offspring_to_json(const OffspringLawQ& law);  // num/den pairs
OffspringLaw offspring_from_json(const std::string& text);
OffspringLawQ offspring_from_json_exact(const std::string& text);
std::string step_to_json(const StepLaw& law);
StepLaw step_from_json(const std::string& text);

}  // namespace brw
