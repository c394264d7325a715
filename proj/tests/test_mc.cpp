#include <doctest.h>

#include "brw/exact.hpp"
#include "brw/mc.hpp"
#include "brw/model.hpp"
#include "brw/rng.hpp"

#include <cmath>
#include <vector>

using namespace brw;

namespace {

BrwParams binary_params(double theta, long long n) {
    return make_params<double>(n, theta,
                               near_critical_family("binary", theta, n),
                               simple_step<double>());
}

}  // namespace

TEST_CASE("population bookkeeping") {
    Population pop(7);
    CHECK(pop.total() == 7);
    CHECK(!pop.extinct());
    CHECK(pop.front() == 0);
    CHECK(pop.back() == 0);
    CHECK(pop.at(0) == 7);
    CHECK(pop.at(3) == 0);
    CHECK(Population(0).extinct());
}

TEST_CASE("one-generation evolution stays within range and conserves shape") {
    const auto params = binary_params(0.0, 200);
    Philox4x32 g(7u, 0u);
    Population pop(200);
    for (int gen = 1; gen <= 15 && !pop.extinct(); ++gen) {
        CHECK(evolve_generation(pop, params, g, 1'000'000));
        if (pop.extinct()) break;
        CHECK(pop.front() <= gen);
        CHECK(pop.back() >= -gen);
        for (long long c : pop.counts) CHECK(c >= 0);
        // trimmed window: both ends occupied
        CHECK(pop.counts.front() > 0);
        CHECK(pop.counts.back() > 0);
    }
}

TEST_CASE("population mean matches n (1 + theta/n)^k") {
    const auto params = binary_params(1.0, 50);
    const int k = 10;
    const long long reps = 2000;
    double sum = 0.0, sumsq = 0.0;
    for (long long r = 0; r < reps; ++r) {
        Philox4x32 g(1234u, static_cast<std::uint64_t>(r));
        Population pop(params.n);
        for (int gen = 1; gen <= k && !pop.extinct(); ++gen)
            evolve_generation(pop, params, g, 1'000'000);
        const double t = static_cast<double>(pop.total());
        sum += t;
        sumsq += t * t;
    }
    const double mean = sum / static_cast<double>(reps);
    const double var =
        (sumsq - static_cast<double>(reps) * mean * mean) /
        static_cast<double>(reps - 1);
    const double se = std::sqrt(var / static_cast<double>(reps));
    const double target = 50.0 * std::pow(1.02, 10.0);
    CHECK(std::abs(mean - target) <= 4.0 * se);
}

TEST_CASE("tail estimates agree with the recursion") {
    const auto params = binary_params(0.0, 20);
    const int k = 8;
    const std::vector<int> xs = {1, 2, 3, 5};
    const auto table = w_table(params, k, 5);
    RunTallies tallies;
    const auto res = estimate_tail(params, k, xs, 20000, 99031u,
                                   kDefaultParticleCap, &tallies);
    REQUIRE(res.size() == xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double u = u_from_w(table.at(k, xs[i]), params.n);
        CHECK(std::abs(res[i].estimate - u) <= 5.0 * res[i].stderr_);
        // same replicates: success counts are nested across thresholds
        if (i > 0) CHECK(res[i].successes <= res[i - 1].successes);
    }
    CHECK(tallies.cap_hits == 0);
}

TEST_CASE("thresholds at or below zero are certain") {
    const auto params = binary_params(0.0, 5);
    const auto res = estimate_tail(params, 4, std::vector<int>{0, -3}, 50, 1u);
    for (const auto& r : res) {
        CHECK(r.estimate == 1.0);
        CHECK(r.stderr_ == 0.0);
    }
}

TEST_CASE("fixed seeds reproduce, different seeds decorrelate") {
    const auto params = binary_params(0.0, 30);
    const auto a = estimate_tail(params, 6, 2, 2000, 5u);
    const auto b = estimate_tail(params, 6, 2, 2000, 5u);
    const auto c = estimate_tail(params, 6, 2, 2000, 6u);
    CHECK(a.estimate == b.estimate);
    CHECK(a.successes == b.successes);
    CHECK(a.successes != c.successes);  // equal only with ~1% probability
}

TEST_CASE("particle cap is tallied and estimates stay sane") {
    const auto params = binary_params(1.0, 40);
    RunTallies tallies;
    const auto res =
        estimate_tail(params, 40, std::vector<int>{25}, 200, 11u, 60, &tallies);
    CHECK(tallies.cap_hits > 0);
    CHECK(res[0].estimate >= 0.0);
    CHECK(res[0].estimate <= 1.0);
}

TEST_CASE("extinction frequency matches q^n") {
    const auto params = binary_params(1.0, 30);
    const double q = extinction_prob(params.offspring);
    CHECK(q == doctest::Approx(29.0 / 31.0).epsilon(1e-12));
    const double target = std::pow(q, 30.0);
    RunTallies tallies;
    const auto res =
        estimate_extinction(params, 600, 2718u, 0, 1'000'000, &tallies);
    CHECK(std::abs(res.estimate - target) <= 4.0 * res.stderr_ + 0.02);
    CHECK(tallies.extinctions == res.successes);
    // survivors are the cap hits: the horizon is far beyond the cap time
    CHECK(tallies.cap_hits == 600 - res.successes);
}

TEST_CASE("supercritical tree conditioned on extinction looks like its dual") {
    // single-root populations; compare running-max bucket frequencies
    const auto sup_law = near_critical_family("binary", 1.0, 10);
    const auto sup = make_params<double>(10, 1.0, sup_law, simple_step<double>());
    const auto dual = dual_law(sup_law);
    const auto sub = make_params<double>(
        10, 10.0 * (dual.mean - 1.0), dual, simple_step<double>());

    const long long reps = 4000;
    const long long horizon = 4000;
    auto bucket_freqs = [&](const BrwParams& params, std::uint64_t seed,
                            long long& kept) {
        std::vector<double> freq(4, 0.0);
        for (long long r = 0; r < reps; ++r) {
            Philox4x32 g(seed, static_cast<std::uint64_t>(r));
            Population pop(1);
            long long M = 0;
            for (long long gen = 1; gen <= horizon && !pop.extinct(); ++gen) {
                if (!evolve_generation(pop, params, g, 100000)) break;
                if (!pop.extinct()) M = std::max(M, pop.front());
            }
            if (!pop.extinct()) continue;  // condition on extinction
            ++kept;
            freq[static_cast<std::size_t>(std::min(M, 3LL))] += 1.0;
        }
        for (double& f : freq) f /= static_cast<double>(kept);
        return freq;
    };

    long long kept_sup = 0, kept_sub = 0;
    const auto fs = bucket_freqs(sup, 100u, kept_sup);
    const auto fd = bucket_freqs(sub, 200u, kept_sub);
    CHECK(kept_sup > reps / 2);  // extinction probability 9/11
    CHECK(kept_sub > reps - 5);  // subcritical dies essentially always
    for (std::size_t b = 0; b < 4; ++b) {
        const double se = std::sqrt(
            fs[b] * (1.0 - fs[b]) / static_cast<double>(kept_sup) +
            fd[b] * (1.0 - fd[b]) / static_cast<double>(kept_sub));
        CHECK(std::abs(fs[b] - fd[b]) <= 4.0 * se + 1e-3);
    }
}

TEST_CASE("front speed experiment thresholds") {
    const auto params = binary_params(1.0, 25);
    const double ghat = 1.0 / std::sqrt(2.0);  // theta=1, step variance 1

    // budget below the required distance: every replicate is slow
    const auto slow = front_speed_experiment(params, 0.2 * ghat, 2.0, 50, 3u);
    CHECK(slow.distance == 11);  // floor(5 * 2) + 1
    CHECK(slow.gens_budget == 7);
    CHECK(slow.freq_slow == 1.0);

    // generous budget: only extinction keeps the front back
    const auto fast = front_speed_experiment(params, 5.0 * ghat, 2.0, 400, 3u);
    CHECK(fast.gens_budget == 176);
    CHECK(fast.freq_slow > 0.05);
    CHECK(fast.freq_slow < 0.30);
    CHECK(slow.freq_slow > fast.freq_slow + 0.5);
}

TEST_CASE("normalized exponential weight has unit mean at every checkpoint") {
    const auto params = binary_params(1.0, 50);
    const double gamma = 0.3;
    CHECK(additive_mean(params, gamma) ==
          doctest::Approx(1.02 * std::cosh(0.3)).epsilon(1e-15));

    const std::vector<long long> cps = {1, 2, 5, 10};
    const auto res = additive_martingale(params, gamma, cps, 20000, 424242u);
    REQUIRE(res.checkpoints.size() == cps.size());
    for (const auto& cp : res.checkpoints) {
        CHECK(cp.stderr_ > 0.0);
        CHECK(std::abs(cp.mean - 1.0) <= 5.0 * cp.stderr_);
    }
    // repeated checkpoint values are recorded at the same generation
    const auto rep2 = additive_martingale(params, gamma, {3, 3}, 500, 9u);
    CHECK(rep2.checkpoints[0].mean == rep2.checkpoints[1].mean);
}
