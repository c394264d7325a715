#include "brw/pde.hpp"

#include "brw/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace brw {

namespace {

FkppProblem resolve(const FkppProblem& in) {
    FkppProblem p = in;
    if (!(p.sigma2 > 0.0) || !(p.sigmaR2 > 0.0))
        throw ConfigError("fkpp: sigma2 and sigmaR2 must be > 0");
    if (!(p.dx > 0.0) || !(p.t_max > 0.0))
        throw ConfigError("fkpp: dx and t_max must be > 0");
    if (p.x_min == 0.0) p.x_min = p.dx;
    if (!(p.x_min > 0.0) || !(p.x_max > p.x_min))
        throw ConfigError("fkpp: need 0 < x_min < x_max");
    const long long J = std::llround((p.x_max - p.x_min) / p.dx);
    if (J < 8) throw ConfigError("fkpp: grid too coarse");
    p.x_max = p.x_min + static_cast<double>(J) * p.dx;  // snap to the grid
    if (p.dt == 0.0)
        p.dt = p.crank_nicolson ? 0.5 * p.dx : 0.4 * p.dx * p.dx / p.sigmaR2;
    if (!p.crank_nicolson && p.dt > p.dx * p.dx / p.sigmaR2 * (1.0 + 1e-12))
        throw ConfigError("fkpp: explicit scheme needs dt <= dx^2/sigmaR2");
    if (p.cap_max == 0.0)
        p.cap_max = 6.0 * p.sigmaR2 / (p.sigma2 * p.x_min * p.x_min);
    if (!(p.boundary_cap > 0.0) || !(p.cap_max > 0.0) || !(p.cap_tol > 0.0))
        throw ConfigError("fkpp: caps and cap_tol must be > 0");
    p.boundary_cap = std::min(p.boundary_cap, p.cap_max);
    if (p.snapshot_times.empty()) p.snapshot_times = {p.t_max};
    for (std::size_t i = 0; i < p.snapshot_times.size(); ++i) {
        const double t = p.snapshot_times[i];
        if (t < 0.0 || t > p.t_max + 1e-12 ||
            (i > 0 && t <= p.snapshot_times[i - 1]))
            throw ConfigError("fkpp: snapshot times must be ascending in [0, t_max]");
    }
    return p;
}

// One explicit step: diffusion and growth forward, the quadratic sink
// treated as phi_new = num / (1 + dt (sigma2/2) phi_old), which keeps the
// update positive and makes steady states exact fixed points.
void step_explicit(std::vector<double>& phi, std::vector<double>& tmp,
                   const FkppProblem& p, double dt) {
    const std::size_t J = phi.size() - 1;
    const double lam = 0.5 * p.sigmaR2 * dt / (p.dx * p.dx);
    tmp[0] = phi[0];
    tmp[J] = phi[J];
    for (std::size_t j = 1; j < J; ++j) {
        const double diff = lam * (phi[j - 1] - 2.0 * phi[j] + phi[j + 1]);
        const double grow = dt * p.theta * phi[j];
        tmp[j] = (phi[j] + diff + grow) / (1.0 + dt * 0.5 * p.sigma2 * phi[j]);
    }
    phi.swap(tmp);
}

// Tridiagonal solve with constant off-diagonals; diag and rhs are
// overwritten, the solution lands in rhs.
void thomas(std::vector<double>& diag, std::vector<double>& rhs, double off) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = off / diag[i - 1];
        diag[i] -= m * off;
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - off * rhs[i + 1]) / diag[i];
}

// Crank-Nicolson step solved by Newton iteration on the interior nodes.
void step_cn(std::vector<double>& phi, const FkppProblem& p, double dt) {
    const std::size_t J = phi.size() - 1;
    const double idx2 = 1.0 / (p.dx * p.dx);
    const double D = 0.5 * p.sigmaR2;
    auto lap = [&](const std::vector<double>& u, std::size_t j) {
        return D * (u[j - 1] - 2.0 * u[j] + u[j + 1]) * idx2;
    };
    auto react = [&](double u) { return p.theta * u - 0.5 * p.sigma2 * u * u; };

    const std::size_t n = J - 1;
    std::vector<double> cons(n);
    for (std::size_t j = 1; j < J; ++j)
        cons[j - 1] = phi[j] + 0.5 * dt * (lap(phi, j) + react(phi[j]));

    std::vector<double> v = phi;
    const double off = -0.5 * dt * D * idx2;
    std::vector<double> diag(n), rhs(n);
    for (int it = 0; it < 8; ++it) {
        for (std::size_t j = 1; j < J; ++j) {
            const double r = v[j] - 0.5 * dt * (lap(v, j) + react(v[j])) -
                             cons[j - 1];
            rhs[j - 1] = -r;
            diag[j - 1] = 1.0 + dt * D * idx2 -
                          0.5 * dt * (p.theta - p.sigma2 * v[j]);
        }
        thomas(diag, rhs, off);
        double maxd = 0.0;
        for (std::size_t j = 1; j < J; ++j) {
            v[j] += rhs[j - 1];
            maxd = std::max(maxd, std::abs(rhs[j - 1]));
        }
        if (maxd < 1e-10 * (1.0 + std::abs(phi[0]))) break;
    }
    for (std::size_t j = 1; j < J; ++j) phi[j] = std::max(v[j], 0.0);
}

// Integrates one cap rung from phi = 0, landing exactly on each snapshot
// time. The implicit path ramps dt up geometrically from the explicit scale
// so the initial boundary-layer transient is resolved.
std::vector<std::vector<double>> integrate(const FkppProblem& p, double cap,
                                           std::size_t J) {
    std::vector<double> phi(J + 1, 0.0), tmp(J + 1, 0.0);
    phi[0] = cap;
    std::vector<std::vector<double>> snaps;
    double t = 0.0;
    long long nstep = 0;
    const double dt_small = 0.4 * p.dx * p.dx / p.sigmaR2;
    for (double target : p.snapshot_times) {
        while (t < target - 1e-12) {
            double dt = p.dt;
            if (p.crank_nicolson && nstep < 40)
                dt = std::min(dt, dt_small * std::pow(2.0, nstep));
            dt = std::min(dt, target - t);
            if (p.crank_nicolson)
                step_cn(phi, p, dt);
            else
                step_explicit(phi, tmp, p, dt);
            t += dt;
            ++nstep;
        }
        snaps.push_back(phi);
    }
    return snaps;
}

std::size_t snap_index(const FkppSolution& sol, double t) {
    std::size_t best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        const double d = std::abs(sol.times[i] - t);
        if (d < dist) {
            dist = d;
            best = i;
        }
    }
    if (!(dist <= std::max(1e-9, 2.0 * sol.problem.dt)))
        throw std::invalid_argument("FkppSolution: no snapshot near requested t");
    return best;
}

}  // namespace

FkppSolution solve_fkpp(const FkppProblem& problem) {
    const FkppProblem p = resolve(problem);
    const std::size_t J =
        static_cast<std::size_t>(std::llround((p.x_max - p.x_min) / p.dx));

    FkppSolution sol;
    sol.problem = p;
    sol.xs.resize(J + 1);
    for (std::size_t j = 0; j <= J; ++j)
        sol.xs[j] = p.x_min + static_cast<double>(j) * p.dx;
    sol.times = p.snapshot_times;

    double cap = p.boundary_cap;
    std::vector<std::vector<double>> snaps;
    int rung = 0;
    for (;;) {
        ++rung;
        auto cur = integrate(p, cap, J);
        sol.cap_history.push_back(cap);
        if (rung > 1) {
            double change = 0.0;
            const auto& a = cur.back();
            const auto& b = snaps.back();
            for (std::size_t j = 1; j < J; ++j)
                change = std::max(change, std::abs(a[j] - b[j]));
            sol.cap_changes.push_back(change);
            snaps = std::move(cur);
            if (change < p.cap_tol) {
                sol.stop_reason = "tol";
                break;
            }
        } else {
            snaps = std::move(cur);
        }
        if (cap >= p.cap_max * (1.0 - 1e-12)) {
            sol.stop_reason = "cap_max";
            break;
        }
        if (rung >= p.max_doublings) {
            sol.stop_reason = "budget";
            sol.flagged = true;
            break;
        }
        cap = std::min(2.0 * cap, p.cap_max);
    }
    sol.cap_used = sol.cap_history.back();
    sol.residual_norm = sol.cap_changes.empty() ? 0.0 : sol.cap_changes.back();
    sol.phi = std::move(snaps);
    return sol;
}

double FkppSolution::at(double t, double x) const {
    const std::size_t ti = snap_index(*this, t);
    if (x < xs.front() - 1e-12 || x > xs.back() + 1e-12)
        throw std::domain_error("FkppSolution: x outside the grid");
    const double pos = (x - xs.front()) / problem.dx;
    const std::size_t j0 = std::min(
        static_cast<std::size_t>(std::max(0.0, std::floor(pos))), xs.size() - 2);
    const double frac = std::clamp(pos - static_cast<double>(j0), 0.0, 1.0);
    return (1.0 - frac) * phi[ti][j0] + frac * phi[ti][j0 + 1];
}

double PsiClosedForm::a() const { return 2.0 * std::abs(theta) / sigmaR2; }
double PsiClosedForm::b() const { return sigma2 / sigmaR2; }

double critical_psi(double sigma2, double sigmaR2, double x) {
    if (!(sigma2 > 0.0) || !(sigmaR2 > 0.0))
        throw std::invalid_argument("critical_psi: coefficients must be > 0");
    if (!(x > 0.0)) throw std::domain_error("critical_psi: x must be > 0");
    return 6.0 * sigmaR2 / (sigma2 * x * x);
}

double psi_closed_form(const PsiClosedForm& pcf, double x) {
    if (!(pcf.sigma2 > 0.0) || !(pcf.sigmaR2 > 0.0))
        throw std::invalid_argument("psi_closed_form: coefficients must be > 0");
    if (!(x > 0.0)) throw std::domain_error("psi_closed_form: x must be > 0");
    if (pcf.theta == 0.0) return critical_psi(pcf.sigma2, pcf.sigmaR2, x);
    const double c = std::sqrt(std::abs(pcf.theta) / (2.0 * pcf.sigmaR2));
    const double base = 2.0 * std::max(pcf.theta, 0.0) / pcf.sigma2;
    const double amp = 3.0 * std::abs(pcf.theta) / pcf.sigma2;
    const double y = c * x;
    double inv_sinh2;  // coth^2(y) - 1 = 1/sinh^2(y)
    if (y > 20.0) {
        inv_sinh2 = 4.0 * std::exp(-2.0 * y);
    } else {
        const double s = std::sinh(y);
        inv_sinh2 = 1.0 / (s * s);
    }
    return base + amp * inv_sinh2;
}

PsiOdeReport psi_ode_verify(const PsiClosedForm& pcf, double x_lo, double x_hi,
                            double dx) {
    if (!(dx > 0.0) || !(x_lo - dx > 0.0) || !(x_hi > x_lo))
        throw std::invalid_argument("psi_ode_verify: need 0 < x_lo - dx, x_lo < x_hi");
    const double base = 2.0 * std::max(pcf.theta, 0.0) / pcf.sigma2;
    auto psit = [&](double x) { return psi_closed_form(pcf, x) - base; };

    PsiOdeReport rep;
    double h = dx;
    for (int level = 0; level < 3; ++level) {
        const long long N = std::llround((x_hi - x_lo) / h);
        double maxr = 0.0;
        for (long long i = 0; i <= N; ++i) {
            const double x = x_lo + static_cast<double>(i) * h;
            const double v = psit(x);
            const double d2 = (psit(x - h) - 2.0 * v + psit(x + h)) / (h * h);
            const double r = d2 - (pcf.a() * v + pcf.b() * v * v);
            maxr = std::max(maxr, std::abs(r));
        }
        rep.dxs.push_back(h);
        rep.max_residuals.push_back(maxr);
        h /= 2.0;
    }
    double order = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i + 1 < rep.max_residuals.size(); ++i)
        if (rep.max_residuals[i + 1] > 0.0) {
            order += std::log2(rep.max_residuals[i] / rep.max_residuals[i + 1]);
            ++cnt;
        }
    rep.fitted_order = cnt > 0 ? order / cnt : 0.0;
    return rep;
}

namespace {

// RK4 sweep of f' = g, g' = 2(rho g - f + f^2) from (0, slope).
// Returns +1 on overshoot (f exceeds 1), -1 otherwise. With `out` set, runs
// the full range and stores f at every `stride`-th step without early exit.
int shoot(double rho, double slope, double h, long long steps,
          long long stride, std::vector<double>* out) {
    double f = 0.0, g = slope;
    if (out) out->push_back(f);
    auto dg = [rho](double fv, double gv) { return 2.0 * (rho * gv - fv + fv * fv); };
    for (long long i = 1; i <= steps; ++i) {
        const double k1f = g, k1g = dg(f, g);
        const double k2f = g + 0.5 * h * k1g,
                     k2g = dg(f + 0.5 * h * k1f, g + 0.5 * h * k1g);
        const double k3f = g + 0.5 * h * k2g,
                     k3g = dg(f + 0.5 * h * k2f, g + 0.5 * h * k2g);
        const double k4f = g + h * k3g, k4g = dg(f + h * k3f, g + h * k3g);
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        if (out) {
            if (i % stride == 0) out->push_back(std::clamp(f, 0.0, 1.0));
        } else {
            if (f > 1.0 + 1e-12) return +1;
            if (g < 0.0 && f < 1.0 - 1e-9) return -1;
        }
    }
    return f > 1.0 + 1e-12 ? +1 : -1;
}

}  // namespace

TravelingWave traveling_wave(double rho, double x_max, double tol) {
    if (!(rho > 0.0) || !(rho < std::sqrt(2.0)))
        throw std::invalid_argument("traveling_wave: rho must lie in (0, sqrt(2))");
    if (!(x_max > 1.0) || !(tol > 0.0))
        throw std::invalid_argument("traveling_wave: need x_max > 1, tol > 0");
    const double dx = 0.01;
    const long long stride = 4;
    const double h = dx / static_cast<double>(stride);
    const long long steps = std::llround(x_max / h);

    double lo = 0.0, hi = 1.0;
    while (shoot(rho, hi, h, steps, stride, nullptr) < 0) {
        hi *= 2.0;
        if (hi > 64.0)
            throw NumericalError("traveling_wave: failed to bracket the slope");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (shoot(rho, mid, h, steps, stride, nullptr) > 0 ? hi : lo) = mid;
    }

    TravelingWave wv;
    wv.rho = rho;
    wv.x_max = x_max;
    wv.dx = dx;
    wv.fprime0 = lo;  // undershoot side keeps f <= 1 throughout
    shoot(rho, lo, h, steps, stride, &wv.f);
    wv.xs.resize(wv.f.size());
    for (std::size_t i = 0; i < wv.xs.size(); ++i)
        wv.xs[i] = static_cast<double>(i) * dx;
    if (std::abs(wv.f.back() - 1.0) >= tol)
        throw NumericalError("traveling_wave: f(x_max) = " +
                             std::to_string(wv.f.back()) +
                             " missed 1 by more than tol");

    // The bisection pins the trajectory that touches 1 exactly at x_max,
    // which differs from the true wave by a deficit whose size relative to
    // 1 - f shrinks like e^{-2 sqrt(rho^2+2) (x_max - x)} away from the end.
    // Truncate the stored profile where that deficit passes 1e-3, so every
    // kept sample tracks the wave and the terminal clamp of at() stays an
    // undershoot.
    const double gap = 2.0 * std::sqrt(rho * rho + 2.0);
    const double tail_cut = x_max - std::log(1000.0) / gap;
    std::size_t keep = wv.f.size();
    while (keep > 1 && wv.xs[keep - 1] > tail_cut) --keep;
    if (wv.xs[keep - 1] < 1.0)
        throw NumericalError("traveling_wave: x_max too small for a clean tail");
    wv.f.resize(keep);
    wv.xs.resize(keep);

    // Decay rate of 1 - f. A single least-squares slope over the outer
    // region is biased: the local slope approaches the asymptotic rate with
    // a correction that itself decays at that same rate. Fit three equal
    // windows instead; their slopes then converge geometrically and one
    // Aitken step cancels the correction exactly.
    auto window_slope = [&](double a, double b) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        long long m = 0;
        for (std::size_t i = 0; i < wv.f.size(); ++i) {
            const double rem = 1.0 - wv.f[i];
            if (wv.xs[i] < a || wv.xs[i] > b || rem <= 1e-13) continue;
            const double y = std::log(rem);
            sx += wv.xs[i];
            sy += y;
            sxx += wv.xs[i] * wv.xs[i];
            sxy += wv.xs[i] * y;
            ++m;
        }
        if (m < 8)
            throw NumericalError(
                "traveling_wave: too few points for the decay fit");
        const double md = static_cast<double>(m);
        return (md * sxy - sx * sy) / (md * sxx - sx * sx);
    };
    // The fit must stop deeper than the stored profile: at the fit end the
    // *slope* contamination from the terminal deficit is gap * e^{-gap
    // (x_max - x)}, so push it below 3e-4 there.
    const double hi_x =
        std::min(wv.xs.back(), x_max - std::log(gap / 3e-4) / gap);
    const double fit_lo = std::min(0.55 * x_max, hi_x - 1.35);
    const double span = (hi_x - fit_lo) / 3.0;
    const double s1 = window_slope(fit_lo, fit_lo + span);
    const double s2 = window_slope(fit_lo + span, fit_lo + 2.0 * span);
    const double s3 = window_slope(fit_lo + 2.0 * span, hi_x);
    const double d1 = s2 - s1, d2 = s3 - s2;
    wv.decay_slope = s3;
    if (std::abs(d2) > 1e-3 * std::abs(s3) && d1 != 0.0) {
        const double ratio = d2 / d1;
        // Only extrapolate when the window slopes actually look geometric.
        if (ratio > 0.05 && ratio < 0.95)
            wv.decay_slope = s3 - d2 * d2 / (d2 - d1);
    }
    return wv;
}

double TravelingWave::at(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= xs.back()) return f.back();
    const double pos = x / dx;
    const std::size_t j0 = std::min(static_cast<std::size_t>(std::floor(pos)),
                                    xs.size() - 2);
    const double frac = std::clamp(pos - static_cast<double>(j0), 0.0, 1.0);
    return std::clamp((1.0 - frac) * f[j0] + frac * f[j0 + 1], 0.0, 1.0);
}

double wave_lower_bound(const TravelingWave& wave, double theta,
                             double sigma2, double sigmaR2, double t, double x) {
    if (!(theta > 0.0))
        throw std::invalid_argument("wave_lower_bound: theta must be > 0");
    const double arg = wave.rho * theta * t - std::sqrt(theta / sigmaR2) * x;
    if (arg <= 0.0) return 0.0;
    return 2.0 * theta / sigma2 * wave.at(arg);
}

double upper_shape_stat(const FkppSolution& sol, double eps, double t) {
    const std::size_t ti = snap_index(sol, t);
    const double cut =
        sol.problem.x_min + 0.75 * (sol.problem.x_max - sol.problem.x_min);
    double stat = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sol.xs.size(); ++j) {
        const double x = sol.xs[j];
        const double v = sol.phi[ti][j];
        if (x < cut || v <= 0.0) continue;
        stat = std::max(stat, std::log(v) +
                                  x * x / (2.0 * sol.problem.sigmaR2 *
                                           (1.0 + eps) * t) -
                                  sol.problem.theta * t);
    }
    return stat;
}

std::string fkpp_to_csv(const FkppSolution& sol) {
    std::ostringstream out;
    out << "t,x,phi\n";
    for (std::size_t ti = 0; ti < sol.times.size(); ++ti)
        for (std::size_t j = 0; j < sol.xs.size(); ++j)
            out << fmt17(sol.times[ti]) << ',' << fmt17(sol.xs[j]) << ','
                << fmt17(sol.phi[ti][j]) << '\n';
    return out.str();
}

std::string fkpp_header_json(const FkppSolution& sol) {
    nlohmann::json j;
    const FkppProblem& p = sol.problem;
    j["theta"] = p.theta;
    j["sigma2"] = p.sigma2;
    j["sigmaR2"] = p.sigmaR2;
    j["x_min"] = p.x_min;
    j["x_max"] = p.x_max;
    j["dx"] = p.dx;
    j["dt"] = p.dt;
    j["t_max"] = p.t_max;
    j["scheme"] = p.crank_nicolson ? "crank_nicolson" : "explicit";
    j["snapshot_times"] = sol.times;
    j["cap_history"] = sol.cap_history;
    j["cap_changes"] = sol.cap_changes;
    j["cap_used"] = sol.cap_used;
    j["stop_reason"] = sol.stop_reason;
    j["flagged"] = sol.flagged;
    j["residual_norm"] = sol.residual_norm;
    j["nondimensionalization"] =
        "Phi(t,xi) = sigma2 * phi(t, sqrt(sigmaR2) xi) solves "
        "Phi_t = Phi_xixi/2 + theta Phi - Phi^2/2";
    return j.dump(2);
}

}  // namespace brw
