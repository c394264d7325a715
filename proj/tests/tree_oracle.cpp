#include "tree_oracle.hpp"

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

namespace brw::testing {

namespace {

using Config = std::vector<int>;  // sorted particle positions

}  // namespace

Rational tree_tail_prob(const BrwParamsQ& params, int k, int x,
                        long long n_roots) {
    if (x <= 0) return Rational(1);

    const int R = params.step.range;
    Rational success(0);
    std::map<Config, Rational> dist;
    dist[Config(static_cast<std::size_t>(n_roots), 0)] = Rational(1);

    for (int gen = 1; gen <= k && !dist.empty(); ++gen) {
        const int remaining = k - gen;  // generations left after this one
        std::map<Config, Rational> next;
        for (const auto& [cfg, pr] : dist) {
            // grow the outcome list one particle at a time: each particle
            // jumps by a step and is replaced by j children at its landing
            // site
            std::vector<std::pair<Config, Rational>> outcomes{{Config{}, pr}};
            for (int pos : cfg) {
                std::vector<std::pair<Config, Rational>> grown;
                for (const auto& [acc, apr] : outcomes)
                    for (const auto& [step, ap] : params.step.probs) {
                        const int land = pos + step;
                        if (land + R * remaining < x) {
                            // neither these children nor any descendant can
                            // reach x, so the branching outcome is irrelevant
                            grown.emplace_back(acc, apr * ap);
                            continue;
                        }
                        for (const auto& [cnt, bp] : params.offspring.probs) {
                            Config c = acc;
                            for (int j = 0; j < cnt; ++j) c.push_back(land);
                            grown.emplace_back(std::move(c), apr * ap * bp);
                        }
                    }
                outcomes = std::move(grown);
            }
            for (auto& [c, p] : outcomes) {
                bool hit = false;
                for (int pos : c)
                    if (pos >= x) {
                        hit = true;
                        break;
                    }
                if (hit) {
                    success += p;
                } else if (!c.empty()) {
                    std::sort(c.begin(), c.end());
                    next[c] += p;
                }
                // empty configurations can never succeed, drop them
            }
        }
        dist = std::move(next);
    }
    return success;
}

}  // namespace brw::testing
