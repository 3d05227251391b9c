#pragma once

#include "cgs/nonlinear.hpp"
#include "cgs/resolvent.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cgs {

// 2 max{2*, 2*/(p-1), 2*/(p+3-2*)} rounded up.
double default_q(const ModelParams& m);

struct FixedPointConfig {
    double q = 0;  // 0: default_q
    double R = 0;  // 0: calibrated at the solve's own t
    GridSpec grid;
    double damping = 0.5;
    double tol_eta = 1e-10;
    double tol_tau = 1e-12;
    int max_outer = 300;
    int max_inner = 400;
    std::optional<double> A1;  // otherwise compute_A1 on the same grid spec
    std::optional<double> Kp;
};

// Everything that depends on (d, p, grid) but not on t.
struct ProblemSetup {
    ModelParams params;
    ProfilesPtr profiles;
    RadialFunction Wp;  // W^p
    double Kp = 0;
    double A1 = 0;
    double q = 0;
    Exponents exps{};

    static ProblemSetup make(const ModelParams& m, const GridPtr& grid, const FixedPointConfig& cfg);
};

// Grid for a solve at t: r_max = max(100, 8/sqrt(alpha(lower end of I(t)))).
GridPtr grid_for_t(const ModelParams& m, double t, double Kp, double A1, const GridSpec& spec);

struct SMapParts {
    double X = 0;    // delta(alpha) <R W, psi>
    double Wp = 0;   // <R W^p, psi>
    double Nn = 0;   // <R N, psi>
    double value = 0;
};

SMapParts s_map_parts(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta);
double s_map(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta);
RadialFunction g_map(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta);

struct FixedPointState {
    double t = 0;
    double tau = 0;
    RadialFunction eta;
    int iter_count = 0;
    int inner_iters = 0;
    double contraction_ratio = 0;      // last meaningful ratio of successive differences
    double max_contraction_ratio = 0;  // over steps above the rounding floor
    std::vector<double> ratios;
    double tau_residual = 0;  // |tau - s(tau, eta)| / tau
    double eta_residual = 0;  // ||eta - g(tau, eta)||_q / max(||eta||_q, alpha(t)^Theta_q)
    bool converged = false;
    bool tau_in_I = false;
    bool eta_in_Y = false;
    std::string warning;
    double R = 0;
    double q = 0;
    double eta_norm = 0;
    double Kp = 0, A1 = 0;
    Exponents exps{};
};

struct StartPoint {
    double tau = 0;
    RadialFunction eta;
};

// R = 10 ||g(t0; (Kp/A1) t0, 0)||_q / alpha(t0)^Theta_q
double calibrate_R(const ProblemSetup& ps, double t0);

FixedPointState solve_fixed_point(const ProblemSetup& ps, double t, const FixedPointConfig& cfg,
                                  const std::optional<StartPoint>& start = std::nullopt);
FixedPointState solve_fixed_point(const ModelParams& m, double t, const FixedPointConfig& cfg);

struct GroundState {
    RadialFunction u;
    double t = 0, tau = 0, alpha = 0;
    double pde_residual = 0;
    double nehari_value = 0;    // relative to ||grad u||^2
    double pohozaev_value = 0;  // relative, see pohozaev_residual
    double action_value = 0;
    double grad_sq = 0;
    bool positive = false;
    bool decreasing = false;
};

GroundState assemble_ground_state(const ProblemSetup& ps, const FixedPointState& state);

struct BridgeResult {
    double omega = 0;
    double t_of_omega = 0;
    double lambda_of_omega = 0;
    double tau = 0;
    double match_residual = 0;  // |G(t)| / tau
    double omega_roundtrip = 0;        // omega rebuilt from (t, tau)
    double omega_roundtrip_rel = 0;    // relative to omega
    RadialFunction Phi;
    double residual_original = 0;      // L^inf residual of the original equation
    double residual_original_rel = 0;  // divided by max Phi^{2*-1}
    double nehari_original = 0;        // relative to ||grad Phi||^2
    double nehari_covariance_gap = 0;  // |N_omega(Phi) - tilde N_t(u)| / ||grad u||^2
    int bisection_steps = 0;
    FixedPointState state;
};

// (2*-2)/(2*-(p+1))
double bridge_exponent(const ModelParams& m);
BridgeResult bridge_omega(const ModelParams& m, double omega, const FixedPointConfig& cfg);

struct SweepRecord {
    double t = 0;
    bool ok = false;
    std::string error;
    double tau = 0;
    double tau_over_t = 0;
    double eta_norm = 0;
    double eta_norm_scaled = 0;  // ||eta||_q / alpha(t)^Theta_q
    double tau_residual = 0, eta_residual = 0;
    double max_contraction_ratio = 0;
    int iterations = 0;
    bool tau_in_I = false, eta_in_Y = false;
    double decay_sup = 0;  // sup (1+r)^{d-2} |W + eta|
};

struct SweepReport {
    std::vector<SweepRecord> records;
    double Kp = 0, A1 = 0, R = 0, q = 0;
    bool tau_monotone = false;
    bool ratio_gap_decreasing = false;  // |tau/t - Kp/A1| along decreasing t
    double eta_slope = 0;               // d log||eta||_q / d log alpha(t)
};

SweepReport sweep(const ModelParams& m, const std::vector<double>& t_values, const FixedPointConfig& cfg,
                  int parallel = 1);

} // namespace cgs
