#include "brw/model.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace brw {

namespace {

OffspringLaw make_binary(double theta, long long n) {
    const double mu = 1.0 + theta / static_cast<double>(n);
    const double p2 = mu / 2.0;
    if (!(p2 > 0.0) || !(p2 < 1.0))
        throw std::invalid_argument("binary family infeasible: need 0 < mean < 2");
    return make_offspring_law<double>({{0, 1.0 - p2}, {2, p2}});
}

// Mean of the geometric law truncated at cap, as a function of the ratio r.
double truncated_geometric_mean(double r, int cap) {
    double num = 0.0, den = 0.0, pw = 1.0;
    for (int i = 0; i <= cap; ++i) {
        num += i * pw;
        den += pw;
        pw *= r;
    }
    return num / den;
}

OffspringLaw make_geometric_truncated(double theta, long long n, int cap) {
    const double mu = 1.0 + theta / static_cast<double>(n);
    if (cap < 2) throw std::invalid_argument("geometric family needs cap >= 2");
    if (!(mu > 0.0) || !(mu < truncated_geometric_mean(1.0, cap)))
        throw std::invalid_argument("geometric family infeasible mean");
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (truncated_geometric_mean(mid, cap) < mu ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    double den = 0.0, pw = 1.0;
    for (int i = 0; i <= cap; ++i) {
        den += pw;
        pw *= r;
    }
    std::vector<std::pair<int, double>> entries;
    pw = 1.0;
    for (int i = 0; i <= cap; ++i) {
        entries.emplace_back(i, pw / den);
        pw *= r;
    }
    OffspringLaw law = make_offspring_law(std::move(entries));
    // Pin the mean exactly to 1 + theta/n: absorb the bisection slack (~1e-15)
    // into the largest-count atom, keeping the law a probability vector.
    const double slack = mu - law.mean;
    auto& top = law.probs.back();
    auto& zero = law.probs.front();
    top.second += slack / top.first;
    zero.second -= slack / top.first;
    return make_offspring_law(std::move(law.probs));
}

}  // namespace

OffspringLaw near_critical_family(const std::string& family, double theta,
                                  long long n, int cap) {
    if (family == "binary") return make_binary(theta, n);
    if (family == "geometric-truncated") return make_geometric_truncated(theta, n, cap);
    throw std::invalid_argument("unknown offspring family: " + family);
}

OffspringLawQ near_critical_family_exact(const std::string& family,
                                         const Rational& theta, long long n) {
    if (family != "binary")
        throw std::invalid_argument("exact mode supports only the binary family");
    const Rational mu = Rational(1) + theta / Rational(n);
    const Rational p2 = mu / 2;
    if (!(p2 > 0) || !(p2 < 1))
        throw std::invalid_argument("binary family infeasible: need 0 < mean < 2");
    return make_offspring_law<Rational>({{0, 1 - p2}, {2, p2}});
}

double extinction_prob(const OffspringLaw& law, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("extinction_prob: tol must be > 0");
    if (law.mean <= 1.0) return 1.0;
    const auto g = [&](double q) { return pgf(law, q) - q; };
    // g > 0 on [0, q*), g < 0 on (q*, 1); bisect, then polish with Newton.
    constexpr double eps0 = 1e-9;
    double lo = 0.0, hi = 1.0 - eps0;
    double q = 1.0 - 2.0 * (law.mean - 1.0) / sigma_tilde_sq(law);  // seed
    if (g(hi) < 0.0) {
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) > 0.0 ? lo : hi) = mid;
        }
        q = 0.5 * (lo + hi);
    }
    for (int it = 0; it < 8; ++it) {
        double fp = 0.0, pw = 1.0;
        int at = 1;
        for (const auto& [i, p] : law.probs) {
            if (i == 0) continue;
            for (; at < i; ++at) pw *= q;
            fp += p * i * pw;
        }
        const double denom = fp - 1.0;
        if (denom == 0.0) break;
        const double next = q - g(q) / denom;
        if (!(next >= 0.0 && next <= 1.0)) break;
        if (std::abs(next - q) < 1e-17) {
            q = next;
            break;
        }
        q = next;
    }
    return std::clamp(q, 0.0, 1.0);
}

OffspringLaw dual_law(const OffspringLaw& law) {
    if (!(law.mean > 1.0))
        throw std::invalid_argument("dual_law requires mean > 1");
    const double q = extinction_prob(law);
    std::vector<std::pair<int, double>> entries;
    double pw = 1.0 / q;  // q^{i-1}
    int at = 0;
    double sum = 0.0;
    for (const auto& [i, p] : law.probs) {
        for (; at < i; ++at) pw *= q;
        entries.emplace_back(i, p * pw);
        sum += p * pw;
    }
    // f(q)/q = 1 up to the root-finding tolerance; renormalize the residue.
    for (auto& [i, p] : entries) p /= sum;
    return make_offspring_law(std::move(entries));
}

// ---- JSON ----------------------------------------------------------------

namespace {

using nlohmann::json;

template <class Law>
json probs_to_json_plain(const Law& law) {
    json probs = json::object();
    for (const auto& [k, p] : law.probs) probs[std::to_string(k)] = to_double(p);
    return probs;
}

}  // namespace

std::string offspring_to_json(const OffspringLaw& law) {
    json j;
    j["probs"] = probs_to_json_plain(law);
    j["mean"] = law.mean;
    j["variance"] = law.variance;
    j["third_moment"] = law.third_moment;
    return j.dump(2);
}

std::string offspring_to_json(const OffspringLawQ& law) {
    json j;
    json probs = json::object();
    for (const auto& [k, p] : law.probs) {
        probs[std::to_string(k)] = {
            {"num", numerator(p).str()}, {"den", denominator(p).str()}};
    }
    j["probs"] = probs;
    j["mean"] = {{"num", numerator(law.mean).str()},
                 {"den", denominator(law.mean).str()}};
    j["variance"] = {{"num", numerator(law.variance).str()},
                     {"den", denominator(law.variance).str()}};
    j["third_moment"] = {{"num", numerator(law.third_moment).str()},
                         {"den", denominator(law.third_moment).str()}};
    return j.dump(2);
}

OffspringLaw offspring_from_json(const std::string& text) {
    const json j = json::parse(text);
    std::vector<std::pair<int, double>> entries;
    for (const auto& [key, val] : j.at("probs").items())
        entries.emplace_back(std::stoi(key), val.get<double>());
    return make_offspring_law(std::move(entries));
}

OffspringLawQ offspring_from_json_exact(const std::string& text) {
    const json j = json::parse(text);
    std::vector<std::pair<int, Rational>> entries;
    for (const auto& [key, val] : j.at("probs").items()) {
        Rational p(BigInt(val.at("num").get<std::string>()),
                   BigInt(val.at("den").get<std::string>()));
        entries.emplace_back(std::stoi(key), p);
    }
    return make_offspring_law(std::move(entries));
}

std::string step_to_json(const StepLaw& law) {
    json j;
    j["probs"] = probs_to_json_plain(law);
    j["range"] = law.range;
    j["variance"] = law.variance;
    return j.dump(2);
}

StepLaw step_from_json(const std::string& text) {
    const json j = json::parse(text);
    std::vector<std::pair<int, double>> entries;
    for (const auto& [key, val] : j.at("probs").items())
        entries.emplace_back(std::stoi(key), val.get<double>());
    return make_step_law(std::move(entries));
}

}  // namespace brw
