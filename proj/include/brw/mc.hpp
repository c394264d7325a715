#pragma once

#include "brw/model.hpp"
#include "brw/rng.hpp"

#include <cstdint>
#include <vector>

namespace brw {

// Particle counts on a dense window of lattice sites. counts[i] is the number
// of particles at site lo + i; the window is trimmed to the occupied range
// after each generation.
struct Population {
    long long lo = 0;
    std::vector<long long> counts;

    explicit Population(long long n0 = 0) {
        if (n0 > 0) counts.assign(1, n0);
    }
    long long total() const {
        long long t = 0;
        for (long long c : counts) t += c;
        return t;
    }
    bool extinct() const { return counts.empty(); }
    long long front() const;  // highest occupied site; throws if extinct
    long long back() const;   // lowest occupied site; throws if extinct
    long long at(long long site) const {
        const long long i = site - lo;
        if (i < 0 || i >= static_cast<long long>(counts.size())) return 0;
        return counts[static_cast<std::size_t>(i)];
    }
};

// Advances the population by one generation: every particle jumps by the
// step law, then is replaced by an offspring count drawn from the branching
// law, children sitting at the parent's landing site. Sampling is aggregated
// per site (multinomial splits via conditional binomials), so cost scales
// with the occupied window, not the particle count. Returns false when the
// new population exceeds `cap` (population is still valid); the draw order
// is fixed (ascending sites, then ascending offsets/counts) so runs are
// reproducible from the generator state alone.
bool evolve_generation(Population& pop, const BrwParams& params, Philox4x32& g,
                       long long cap);

struct RunTallies {
    long long extinctions = 0;  // replicates that died out
    long long cap_hits = 0;     // replicates stopped at the particle cap
    long long horizon_hits = 0; // replicates that ran the full generation budget
};

struct EstimatorResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    long long reps = 0;
    long long successes = 0;
};

inline constexpr long long kDefaultParticleCap = 100'000'000;

// Fraction of replicates in which the running front maximum reaches >= x
// within k generations, starting from params.n particles at the origin.
// Targets the n-particle tail u_k(x) = 1 - (1 - w_k(x))^n. All thresholds in
// `xs` are evaluated on the same replicates; thresholds <= 0 are certain
// already at generation 0. A replicate that hits the particle cap before
// deciding is counted as a success only for thresholds its running maximum
// already passed (tallied in `tallies`).
std::vector<EstimatorResult> estimate_tail(const BrwParams& params, int k,
                                           const std::vector<int>& xs,
                                           long long reps, std::uint64_t seed,
                                           long long cap = kDefaultParticleCap,
                                           RunTallies* tallies = nullptr);
EstimatorResult estimate_tail(const BrwParams& params, int k, int x,
                              long long reps, std::uint64_t seed,
                              long long cap = kDefaultParticleCap);

// Fraction of replicates whose whole n-particle system dies out by the
// horizon (default 200*n generations). Hitting the particle cap counts as
// survival. Targets q_n^n with a small horizon-truncation bias.
EstimatorResult estimate_extinction(const BrwParams& params, long long reps,
                                    std::uint64_t seed, long long horizon = 0,
                                    long long cap = kDefaultParticleCap,
                                    RunTallies* tallies = nullptr);

struct SpeedResult {
    double freq_slow = 0.0;  // fraction with running max < distance at the budget
    double stderr_ = 0.0;
    long long gens_budget = 0;
    long long distance = 0;
    long long reps = 0;
    RunTallies tallies;
};

// Inverse-front-speed experiment: gives each replicate floor(gamma * n * t)
// generations and asks whether the running front maximum stayed at or below
// floor(sqrt(n) * t), i.e. no particle ever strictly above sqrt(n) t. Around
// gamma = 1/sqrt(2 theta sigma_R^2) the answer flips from almost-always (too
// little time) to only-on-extinction.
SpeedResult front_speed_experiment(const BrwParams& params, double gamma,
                                   double t, long long reps, std::uint64_t seed,
                                   long long cap = kDefaultParticleCap);

// One-generation mean of sum_children exp(-gamma * position) for a single
// particle at 0: (1 + theta/n) * sum_z a_z exp(-gamma z).
double additive_mean(const BrwParams& params, double gamma);

struct AdditiveCheckpoint {
    long long k = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct AdditiveResult {
    double gamma = 0.0;
    std::vector<AdditiveCheckpoint> checkpoints;
    long long reps = 0;
    RunTallies tallies;
};

// Monte Carlo means of the normalized exponential weight
//   W_k = additive_mean^{-k} * sum_sites count(z) * exp(-gamma z)
// for a single initial particle, recorded at the given generation
// checkpoints (ascending). E[W_k] = 1 exactly for every k; an extinct
// replicate contributes W = 0 from its death time on.
AdditiveResult additive_martingale(const BrwParams& params, double gamma,
                                   const std::vector<long long>& checkpoints,
                                   long long reps, std::uint64_t seed,
                                   long long cap = 1'000'000'000'000'000LL);

}  // namespace brw
