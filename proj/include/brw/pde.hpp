#pragma once

#include <string>
#include <vector>

namespace brw {

// Singular FKPP problem on (x_min, x_max):
//   phi_t = (sigmaR2/2) phi_xx + theta phi - (sigma2/2) phi^2,
//   phi(0, x) = 0,  phi(t, x_max) = 0,
// with the infinite x->0 boundary emulated by a finite cap at x_min that is
// raised over a doubling ladder. The ladder stops when the interior sup-norm
// change drops below cap_tol or the cap reaches cap_max; cap_max defaults to
// 6 sigmaR2 / (sigma2 x_min^2), the height of the exact x^-2 singular
// profile at the boundary node, which places the effective singularity at 0.
struct FkppProblem {
    double theta = 0.0;
    double sigma2 = 1.0;   // branching coefficient (quadratic sink)
    double sigmaR2 = 1.0;  // diffusion coefficient (step variance)
    double x_min = 0.0;    // 0 = one cell off the singularity (dx)
    double x_max = 10.0;
    double dx = 0.01;
    double t_max = 1.0;
    double dt = 0.0;  // 0 = 0.4 dx^2/sigmaR2 (explicit) or dx/2 (implicit)
    double boundary_cap = 1e3;  // first rung of the cap ladder
    double cap_tol = 1e-6;
    double cap_max = 0.0;  // 0 = auto calibration, see above
    int max_doublings = 64;
    bool crank_nicolson = false;
    std::vector<double> snapshot_times;  // ascending; empty = {t_max}
};

struct FkppSolution {
    FkppProblem problem;  // with defaults resolved
    std::vector<double> xs;
    std::vector<double> times;
    std::vector<std::vector<double>> phi;  // phi[t][x]
    double cap_used = 0.0;
    double residual_norm = 0.0;  // interior sup-change at the last cap raise
    std::vector<double> cap_history;
    std::vector<double> cap_changes;  // interior sup-change per raise
    std::string stop_reason;          // "tol", "cap_max" or "budget"
    bool flagged = false;             // ladder budget ran out

    // nearest stored snapshot in t (must match within a step), linear
    // interpolation in x
    double at(double t, double x) const;
};

FkppSolution solve_fkpp(const FkppProblem& problem);

// Closed form of the all-time limit for theta != 0:
//   psi(x) = 2 theta^+ / sigma2 + (3|theta|/sigma2) (coth^2(cx) - 1),
//   c = sqrt(|theta| / (2 sigmaR2)),
// evaluated through 1/sinh^2 for stability. theta = 0 is routed to
// critical_psi. The shifted function psit = psi - 2 theta^+/sigma2 solves
// psit'' = a psit + b psit^2 with the coefficients below.
struct PsiClosedForm {
    double theta = 0.0;
    double sigma2 = 1.0;
    double sigmaR2 = 1.0;

    double a() const;  // 2|theta| / sigmaR2
    double b() const;  // sigma2 / sigmaR2
};

double critical_psi(double sigma2, double sigmaR2, double x);
double psi_closed_form(const PsiClosedForm& pcf, double x);

// Residual of the closed form in its own ODE under centered differences;
// refines dx twice and fits the convergence order (expected 2).
struct PsiOdeReport {
    std::vector<double> dxs;
    std::vector<double> max_residuals;
    double fitted_order = 0.0;
};
PsiOdeReport psi_ode_verify(const PsiClosedForm& pcf, double x_lo, double x_hi,
                            double dx);

// Monotone front profile solving (1/2) f'' - rho f' + f - f^2 = 0 with
// f(0) = 0, f(infinity) = 1, found by bisecting the initial slope. The
// asymptotic approach to 1 is exponential with rate rho - sqrt(rho^2 + 2);
// decay_slope is the rate fitted to log(1 - f) over the outer region, with
// one geometric-extrapolation step to cancel the leading finite-depth bias.
// The stored samples end a short stretch before x_max: near the end the
// shooting trajectory hugs its terminal condition instead of the wave, and
// that stretch is dropped so every kept sample is wave-accurate.
struct TravelingWave {
    double rho = 0.0;
    double x_max = 0.0;
    double dx = 0.0;
    std::vector<double> xs;
    std::vector<double> f;
    double fprime0 = 0.0;
    double decay_slope = 0.0;

    double at(double x) const;  // linear interpolation, clamped to [0, 1]
};
TravelingWave traveling_wave(double rho, double x_max, double tol);

// (2 theta / sigma2) * f_rho((rho theta t - sqrt(theta/sigmaR2) x)_+), a
// wave-shaped lower bound for phi(t, x) when theta > 0. Arguments beyond the
// wave's stored range use the last stored sample (an undershoot, so the
// bound stays valid).
double wave_lower_bound(const TravelingWave& wave, double theta,
                             double sigma2, double sigmaR2, double t, double x);

// Gaussian-tail shape statistic: sup over the outer quarter of the grid of
//   log phi(t, x) + x^2 / (2 sigmaR2 (1+eps) t) - theta t,
// finite and grid-stable when the far tail decays no slower than the
// heat-kernel rate. Nodes with phi = 0 are skipped.
double upper_shape_stat(const FkppSolution& sol, double eps, double t);

std::string fkpp_to_csv(const FkppSolution& sol);
std::string fkpp_header_json(const FkppSolution& sol);

}  // namespace brw
