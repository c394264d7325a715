#include "brw/mc.hpp"

#include "brw/io.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace brw {

long long Population::front() const {
    for (std::size_t i = counts.size(); i-- > 0;)
        if (counts[i] > 0) return lo + static_cast<long long>(i);
    throw std::logic_error("Population::front: empty population");
}

long long Population::back() const {
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] > 0) return lo + static_cast<long long>(i);
    throw std::logic_error("Population::back: empty population");
}

namespace {

long long draw_binomial(Philox4x32& g, long long t, double p) {
    if (t <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return t;
    std::binomial_distribution<long long> dist(t, p);
    return dist(g);
}

// Exact multinomial split of `total` over the atoms of `probs` via the
// conditional-binomial cascade, emitted in ascending-atom order.
template <class Emit>
void multinomial_split(Philox4x32& g, long long total,
                       const std::vector<std::pair<int, double>>& probs,
                       Emit&& emit) {
    long long rem = total;
    double remp = 1.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        if (rem == 0) return;
        const double p = std::min(1.0, probs[i].second / remp);
        const long long c = draw_binomial(g, rem, p);
        if (c > 0) emit(probs[i].first, c);
        rem -= c;
        remp -= probs[i].second;
    }
    if (rem > 0) emit(probs.back().first, rem);
}

}  // namespace

bool evolve_generation(Population& pop, const BrwParams& params, Philox4x32& g,
                       long long cap) {
    if (pop.extinct()) return true;
    const int R = params.step.range;
    const long long width = static_cast<long long>(pop.counts.size());
    const long long nlo = pop.lo - R;
    const long long nwidth = width + 2LL * R;

    std::vector<long long> arrivals(static_cast<std::size_t>(nwidth), 0);
    for (long long i = 0; i < width; ++i) {
        const long long c = pop.counts[static_cast<std::size_t>(i)];
        if (c == 0) continue;
        multinomial_split(g, c, params.step.probs, [&](int off, long long m) {
            arrivals[static_cast<std::size_t>(i + R + off)] += m;
        });
    }

    std::vector<long long> next(static_cast<std::size_t>(nwidth), 0);
    long long total = 0;
    for (long long i = 0; i < nwidth; ++i) {
        const long long a = arrivals[static_cast<std::size_t>(i)];
        if (a == 0) continue;
        long long children = 0;
        multinomial_split(g, a, params.offspring.probs,
                          [&](int count, long long m) {
                              children += static_cast<long long>(count) * m;
                          });
        next[static_cast<std::size_t>(i)] = children;
        total += children;
    }

    long long first = 0;
    long long last = nwidth - 1;
    while (first <= last && next[static_cast<std::size_t>(first)] == 0) ++first;
    while (last >= first && next[static_cast<std::size_t>(last)] == 0) --last;
    if (first > last) {
        pop.counts.clear();
        pop.lo = 0;
    } else {
        pop.counts.assign(next.begin() + first, next.begin() + last + 1);
        pop.lo = nlo + first;
    }
    return total <= cap;
}

std::vector<EstimatorResult> estimate_tail(const BrwParams& params, int k,
                                           const std::vector<int>& xs,
                                           long long reps, std::uint64_t seed,
                                           long long cap, RunTallies* tallies) {
    if (xs.empty()) throw std::invalid_argument("estimate_tail: no thresholds");
    if (k < 0 || reps < 1)
        throw std::invalid_argument("estimate_tail: need k >= 0, reps >= 1");
    const long long x_top = *std::max_element(xs.begin(), xs.end());

    std::vector<long long> maxes(static_cast<std::size_t>(reps), 0);
    long long ext = 0, caps = 0, full = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : ext, caps, full)
    for (long long r = 0; r < reps; ++r) {
        Philox4x32 g(seed, static_cast<std::uint64_t>(r));
        Population pop(params.n);
        long long M = 0;
        int gen = 1;
        // thresholds <= 0 are certain at generation 0, no simulation needed
        for (; gen <= k && M < x_top; ++gen) {
            const bool ok = evolve_generation(pop, params, g, cap);
            if (pop.extinct()) {
                ++ext;
                break;
            }
            M = std::max(M, pop.front());
            if (!ok) {
                ++caps;
                break;
            }
        }
        if (gen > k) ++full;
        maxes[static_cast<std::size_t>(r)] = M;
    }

    if (tallies) {
        tallies->extinctions += ext;
        tallies->cap_hits += caps;
        tallies->horizon_hits += full;
    }
    std::vector<EstimatorResult> out;
    out.reserve(xs.size());
    for (int x : xs) {
        EstimatorResult res;
        res.reps = reps;
        for (long long M : maxes)
            if (M >= x) ++res.successes;
        res.estimate = static_cast<double>(res.successes) / static_cast<double>(reps);
        res.stderr_ = std::sqrt(res.estimate * (1.0 - res.estimate) /
                                static_cast<double>(reps));
        out.push_back(res);
    }
    return out;
}

EstimatorResult estimate_tail(const BrwParams& params, int k, int x,
                              long long reps, std::uint64_t seed, long long cap) {
    return estimate_tail(params, k, std::vector<int>{x}, reps, seed, cap).front();
}

EstimatorResult estimate_extinction(const BrwParams& params, long long reps,
                                    std::uint64_t seed, long long horizon,
                                    long long cap, RunTallies* tallies) {
    if (reps < 1) throw std::invalid_argument("estimate_extinction: reps >= 1");
    if (horizon <= 0) horizon = 200 * params.n;

    long long died = 0, caps = 0, full = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : died, caps, full)
    for (long long r = 0; r < reps; ++r) {
        Philox4x32 g(seed, static_cast<std::uint64_t>(r));
        Population pop(params.n);
        long long gen = 1;
        for (; gen <= horizon; ++gen) {
            const bool ok = evolve_generation(pop, params, g, cap);
            if (pop.extinct()) {
                ++died;
                break;
            }
            if (!ok) {
                ++caps;  // runaway growth, count as survival
                break;
            }
        }
        if (gen > horizon) ++full;
    }

    if (tallies) {
        tallies->extinctions += died;
        tallies->cap_hits += caps;
        tallies->horizon_hits += full;
    }
    EstimatorResult res;
    res.reps = reps;
    res.successes = died;
    res.estimate = static_cast<double>(died) / static_cast<double>(reps);
    res.stderr_ =
        std::sqrt(res.estimate * (1.0 - res.estimate) / static_cast<double>(reps));
    return res;
}

SpeedResult front_speed_experiment(const BrwParams& params, double gamma,
                                   double t, long long reps, std::uint64_t seed,
                                   long long cap) {
    if (gamma <= 0.0 || t <= 0.0 || reps < 1)
        throw std::invalid_argument("front_speed_experiment: bad arguments");
    const double nd = static_cast<double>(params.n);
    SpeedResult res;
    res.gens_budget = static_cast<long long>(std::floor(gamma * nd * t));
    // "slow" means no particle ever sits strictly above sqrt(n) t, so the
    // first disqualifying site is floor(sqrt(n) t) + 1
    res.distance =
        static_cast<long long>(std::floor(std::sqrt(nd) * t)) + 1;
    res.reps = reps;

    long long slow = 0, ext = 0, caps = 0, full = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : slow, ext, caps, full)
    for (long long r = 0; r < reps; ++r) {
        Philox4x32 g(seed, static_cast<std::uint64_t>(r));
        Population pop(params.n);
        long long M = 0;
        long long gen = 1;
        for (; gen <= res.gens_budget; ++gen) {
            const bool ok = evolve_generation(pop, params, g, cap);
            if (pop.extinct()) {
                ++ext;
                break;
            }
            M = std::max(M, pop.front());
            if (M >= res.distance) break;
            if (!ok) {
                ++caps;
                break;
            }
        }
        if (gen > res.gens_budget) ++full;
        if (M < res.distance) ++slow;
    }

    res.tallies.extinctions = ext;
    res.tallies.cap_hits = caps;
    res.tallies.horizon_hits = full;
    res.freq_slow = static_cast<double>(slow) / static_cast<double>(reps);
    res.stderr_ = std::sqrt(res.freq_slow * (1.0 - res.freq_slow) /
                            static_cast<double>(reps));
    return res;
}

double additive_mean(const BrwParams& params, double gamma) {
    double s = 0.0;
    for (const auto& [z, a] : params.step.probs)
        s += a * std::exp(-gamma * static_cast<double>(z));
    return params.offspring.mean * s;
}

namespace {

double exp_weight(const Population& pop, double gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < pop.counts.size(); ++i) {
        const long long c = pop.counts[i];
        if (c > 0)
            s += static_cast<double>(c) *
                 std::exp(-gamma *
                          static_cast<double>(pop.lo + static_cast<long long>(i)));
    }
    return s;
}

}  // namespace

AdditiveResult additive_martingale(const BrwParams& params, double gamma,
                                   const std::vector<long long>& checkpoints,
                                   long long reps, std::uint64_t seed,
                                   long long cap) {
    if (checkpoints.empty() || reps < 1)
        throw std::invalid_argument("additive_martingale: bad arguments");
    for (std::size_t i = 0; i < checkpoints.size(); ++i)
        if (checkpoints[i] < 1 ||
            (i > 0 && checkpoints[i] < checkpoints[i - 1]))
            throw std::invalid_argument(
                "additive_martingale: checkpoints must be ascending and >= 1");

    const double logm = std::log(additive_mean(params, gamma));
    const std::size_t C = checkpoints.size();
    const long long k_max = checkpoints.back();

    // Online sum/sumsq per checkpoint, serial over replicates: memory stays
    // O(C) even for per-generation checkpoint lists, and accumulation order
    // is fixed so results are reproducible. Extinct replicates contribute
    // W = 0 at every later checkpoint, which the accumulators get for free.
    std::vector<double> sum(C, 0.0), sumsq(C, 0.0);
    long long ext = 0, caps = 0, full = 0;
    for (long long r = 0; r < reps; ++r) {
        Philox4x32 g(seed, static_cast<std::uint64_t>(r));
        Population pop(1);
        std::size_t ci = 0;
        for (long long k = 1; k <= k_max && ci < C; ++k) {
            const bool ok = evolve_generation(pop, params, g, cap);
            if (pop.extinct()) {
                ++ext;
                break;
            }
            const bool at_cp = (checkpoints[ci] == k);
            if (at_cp || !ok) {
                const double W =
                    exp_weight(pop, gamma) *
                    std::exp(-static_cast<double>(k) * logm);
                while (ci < C && checkpoints[ci] == k) {
                    sum[ci] += W;
                    sumsq[ci] += W * W;
                    ++ci;
                }
                if (!ok)  // cannot evolve further, freeze W for later checkpoints
                    for (std::size_t cj = ci; cj < C; ++cj) {
                        sum[cj] += W;
                        sumsq[cj] += W * W;
                    }
            }
            if (!ok) {
                ++caps;
                break;
            }
        }
        if (!pop.extinct()) ++full;
    }

    AdditiveResult res;
    res.gamma = gamma;
    res.reps = reps;
    res.tallies.extinctions = ext;
    res.tallies.cap_hits = caps;
    res.tallies.horizon_hits = full;
    const double N = static_cast<double>(reps);
    for (std::size_t c = 0; c < C; ++c) {
        const double mean = sum[c] / N;
        double var = 0.0;
        if (reps > 1)
            var = std::max(0.0, (sumsq[c] - N * mean * mean) / (N - 1.0));
        res.checkpoints.push_back({checkpoints[c], mean, std::sqrt(var / N)});
    }
    return res;
}

}  // namespace brw
