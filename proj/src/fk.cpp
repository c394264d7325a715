#include "brw/fk.hpp"

#include <functional>
#include <stdexcept>

namespace brw {

std::vector<WalkPathQ> enumerate_paths(const StepLawQ& law, int x0, int m,
                                       long long budget) {
    if (m < 0) throw std::invalid_argument("enumerate_paths: m must be >= 0");
    std::vector<WalkPathQ> paths{{{x0}, Rational(1)}};
    for (int step = 0; step < m; ++step) {
        if (static_cast<long long>(paths.size()) *
                static_cast<long long>(law.probs.size()) >
            budget)
            throw ResourceError("enumerate_paths: path budget exceeded");
        std::vector<WalkPathQ> next;
        next.reserve(paths.size() * law.probs.size());
        for (const auto& p : paths)
            for (const auto& [off, a] : law.probs) {
                WalkPathQ q = p;
                q.sites.push_back(q.sites.back() + off);
                q.prob *= a;
                next.push_back(std::move(q));
            }
        paths = std::move(next);
    }
    return paths;
}

std::vector<Rational> y_trace(const BrwParamsQ& params, const TailTableQ& w,
                              const std::vector<int>& sites, int m) {
    if (sites.empty() || sites.front() < 1)
        throw std::invalid_argument("y_trace: path must start at a site >= 1");
    const int K = static_cast<int>(sites.size()) - 1;
    if (K > m || m > w.k_max)
        throw std::invalid_argument("y_trace: path longer than table depth");

    const Rational mean = params.offspring.mean;
    const Rational surv = Rational(1) - params.offspring.p0();

    int tau = K + 1;  // first index at or below 0, sentinel if none
    for (int i = 0; i <= K; ++i)
        if (sites[i] <= 0) {
            tau = i;
            break;
        }

    std::vector<Rational> pref(static_cast<std::size_t>(K) + 1, Rational(1));
    std::vector<Rational> meanpow(static_cast<std::size_t>(K) + 1, Rational(1));
    for (int j = 1; j <= K; ++j) {
        const Rational wj = w.at(m - j, sites[static_cast<std::size_t>(j)]);
        pref[static_cast<std::size_t>(j)] =
            pref[static_cast<std::size_t>(j - 1)] *
            (Rational(1) - H_fn(params.offspring, wj));
        meanpow[static_cast<std::size_t>(j)] =
            meanpow[static_cast<std::size_t>(j - 1)] * mean;
    }

    // value the process keeps after crossing 0 at step tau
    Rational frozen = 0;
    if (tau >= 1 && tau <= K)
        frozen = meanpow[static_cast<std::size_t>(tau - 1)] * surv *
                 pref[static_cast<std::size_t>(tau - 1)];

    std::vector<Rational> Y(static_cast<std::size_t>(K) + 1);
    Y[0] = w.at(m, sites[0]);
    for (int k = 1; k <= K; ++k) {
        Rational val = 0;
        if (tau >= k)
            val = meanpow[static_cast<std::size_t>(k)] *
                  w.at(m - k, sites[static_cast<std::size_t>(k)]) *
                  pref[static_cast<std::size_t>(k)];
        if (tau <= k - 1) val += frozen;
        Y[static_cast<std::size_t>(k)] = val;
    }
    return Y;
}

MartingaleCheckQ check_martingale(const BrwParamsQ& params, int x0, int m,
                                  long long budget) {
    if (x0 < 1) throw std::invalid_argument("check_martingale: x0 must be >= 1");
    if (m < 0) throw std::invalid_argument("check_martingale: m must be >= 0");

    const int R = params.step.range;
    const TailTableQ table = w_table(params, m, x0 + R * m);
    const auto paths = enumerate_paths(reflect(params.step), x0, m, budget);

    MartingaleCheckQ out;
    out.reference = table.at(m, x0);
    out.expectations.assign(static_cast<std::size_t>(m) + 1, Rational(0));
    for (const auto& path : paths) {
        const auto Y = y_trace(params, table, path.sites, m);
        for (int k = 0; k <= m; ++k)
            out.expectations[static_cast<std::size_t>(k)] +=
                path.prob * Y[static_cast<std::size_t>(k)];
    }
    out.max_error = 0;
    for (const auto& e : out.expectations)
        out.max_error = std::max(out.max_error, abs_val(e - out.reference));
    out.exact = (out.max_error == 0);
    return out;
}

FkCheckQ fk_identity(const BrwParamsQ& params, int x, int m, int y, long long z,
                     int horizon, long long budget) {
    if (y < 0 || x < y) throw std::invalid_argument("fk_identity: need 0 <= y <= x");
    if (z >= 0 && z <= x) throw std::invalid_argument("fk_identity: need z > x");
    if (horizon < 0 || horizon > m)
        throw std::invalid_argument("fk_identity: need 0 <= horizon <= m");

    const int R = params.step.range;
    const TailTableQ table = w_table(params, m, x + R * m);
    const StepLawQ walk = reflect(params.step);
    const Rational mean = params.offspring.mean;

    Rational total = 0;
    long long nodes = 0;
    std::function<void(int, int, const Rational&, const Rational&)> dfs =
        [&](int site, int i, const Rational& prob, const Rational& weight) {
            if (++nodes > budget)
                throw ResourceError("fk_identity: path budget exceeded");
            const bool stopped =
                site <= y || (z >= 0 && site >= z) || i == horizon;
            if (stopped) {
                total += prob * weight * table.at(m - i, site);
                return;
            }
            for (const auto& [off, a] : walk.probs) {
                const int s2 = site + off;
                const Rational w2 = table.at(m - i - 1, s2);
                dfs(s2, i + 1, prob * a,
                    weight * mean * (Rational(1) - H_fn(params.offspring, w2)));
            }
        };
    dfs(x, 0, Rational(1), Rational(1));

    FkCheckQ out;
    out.reference = table.at(m, x);
    out.value = total;
    out.exact = (out.value == out.reference);
    return out;
}

}  // namespace brw
