// One PASS/FAIL line per acceptance criterion, with its runtime budget.

#include "cgs/closed_forms.hpp"
#include "cgs/errors.hpp"
#include "cgs/fixed_point.hpp"
#include "cgs/oracle.hpp"
#include "cgs/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace cgs;

namespace {

const ModelParams d3 = ModelParams::make(3, 4.0);
const ModelParams d4 = ModelParams::make(4, 2.0);
const GridSpec fine_grid{4096, 32768, 0};

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double order(double coarse, double fine) { return std::log2(coarse / fine); }

bool run(int id, double budget_s, const std::function<void(Outcome&)>& body)
{
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail << " [exception: " << e.what() << "]";
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(elapsed < budget_s, "runtime budget " + std::to_string(budget_s) + " s");
    std::printf("criterion %d: %s (%.2f s)%s\n", id, out.pass ? "PASS" : "FAIL", elapsed, out.detail.str().c_str());
    std::fflush(stdout);
    return out.pass;
}

FixedPointConfig config_for(const ModelParams& m, const GridSpec& grid)
{
    FixedPointConfig cfg;
    cfg.grid = grid;
    cfg.Kp = compute_Kp(m);
    cfg.A1 = compute_A1(m, grid).value;
    return cfg;
}

ProblemSetup setup_for(const ModelParams& m, double t, const FixedPointConfig& cfg)
{
    return ProblemSetup::make(m, grid_for_t(m, t, *cfg.Kp, *cfg.A1, cfg.grid), cfg);
}

void fourier(Outcome& o)
{
    double worst = 0;
    for (int d : {3, 4})
        for (double s : {0.25, 1.0, 4.0})
            worst = std::max(worst, std::abs(fourier_ball_quadrature(d, s) / fourier_ball_integral(d, s) - 1));
    o.detail << " max rel error " << worst;
    o.require(worst < 1e-6, "rel error < 1e-6");
}

void identities(Outcome& o)
{
    IdentityTolerances tol;
    tol.halving_ratio = 4.0;
    for (const ModelParams& m : {d3, d4}) {
        for (const CheckRecord& c : identity_suite(m, GridSpec{}, tol)) {
            if (c.name.find("halving_ratio") != std::string::npos)
                o.detail << " d=" << m.d << " " << c.name << "=" << c.lhs;
            if (!c.skipped)
                o.require(c.pass, "d=" + std::to_string(m.d) + " " + c.name);
        }
    }
}

void spectrum(Outcome& o)
{
    for (const ModelParams& m : {d3, d4}) {
        const ProfilesPtr pr = Profiles::make(m, make_grid(m.d, GridSpec{}, 1.0));
        const EigenPair e = lowest_eigenpair(pr);
        const double rq = rayleigh_quotient(pr, pr->LW);
        o.detail << " d=" << m.d << " e0=" << e.e0 << " negatives=" << e.negative_count << " rayleigh(LW)=" << rq;
        o.require(e.negative_count == 1, "one negative eigenvalue, d=" + std::to_string(m.d));
        o.require(std::abs(rq) < 1e-6, "Rayleigh quotient of LambdaW < 1e-6, d=" + std::to_string(m.d));
    }
}

void dichotomy(Outcome& o)
{
    for (const ModelParams& m : {d3, d4}) {
        const ResolventProbe p = probe_resolvent(m, GridSpec{}, {1e-2, 1e-3, 1e-4}, default_q(m));
        const double target = m.d == 3 ? -0.5 : p.slope_law;
        o.detail << " d=" << m.d << " generic slope " << p.slope_generic << " (target " << target << ")"
                 << " W slope " << p.slope_W << " block/direct " << p.block_direct_max;
        o.require(std::abs(p.slope_generic - target) <= 0.05, "generic slope, d=" + std::to_string(m.d));
        o.require(std::abs(p.slope_W) < 0.05, "W slope, d=" + std::to_string(m.d));
        o.require(p.block_direct_max < 1e-6, "block vs direct, d=" + std::to_string(m.d));
    }
}

void convergence(Outcome& o)
{
    const SweepReport rep = sweep(d3, {1e-2, 1e-3, 1e-4}, FixedPointConfig{}, 3);
    const double lead = rep.Kp / rep.A1;
    for (const SweepRecord& r : rep.records) {
        o.detail << " t=" << r.t << " ratio=" << r.max_contraction_ratio << " tau/t=" << r.tau_over_t;
        o.require(r.ok, "solve at t=" + std::to_string(r.t) + " " + r.error);
        o.require(r.max_contraction_ratio < 0.9, "contraction ratio < 0.9");
        o.require(r.tau_in_I, "tau in I(t)");
        o.require(r.eta_in_Y, "eta in Y_q(R,t)");
    }
    const double gap = std::abs(rep.records.back().tau_over_t - lead) / lead;
    o.detail << " Kp/A1=" << lead << " gap at 1e-4=" << gap;
    o.require(rep.tau_monotone, "tau strictly increasing in t");
    o.require(rep.ratio_gap_decreasing, "|tau/t - Kp/A1| strictly decreasing");
    o.require(gap < 0.1, "gap < 10% at t = 1e-4");
}

void ground_state_quality(Outcome& o)
{
    // The three-point residual reaches its rounding floor (eps |u| / h^2, about 1e-8) on the fine
    // grid, so the order is measured one and two halvings below it.
    const GridSpec mid{fine_grid.n_inner / 2, fine_grid.n_outer / 2, 0};
    const GridSpec low{fine_grid.n_inner / 4, fine_grid.n_outer / 4, 0};
    const FixedPointConfig cfg = config_for(d3, fine_grid);
    const FixedPointConfig cfg_mid = config_for(d3, mid);
    const FixedPointConfig cfg_low = config_for(d3, low);
    auto residual = [](const FixedPointConfig& c, double t) {
        const ProblemSetup ps = setup_for(d3, t, c);
        return assemble_ground_state(ps, solve_fixed_point(ps, t, c)).pde_residual;
    };
    for (double t : {1e-2, 1e-3, 1e-4}) {
        const ProblemSetup ps = setup_for(d3, t, cfg);
        const GroundState gs = assemble_ground_state(ps, solve_fixed_point(ps, t, cfg));
        const double p = order(residual(cfg_low, t), residual(cfg_mid, t));
        o.detail << " t=" << t << " residual=" << gs.pde_residual << " order=" << p << " nehari=" << gs.nehari_value
                 << " pohozaev=" << gs.pohozaev_value;
        o.require(p >= 1.9, "PDE residual second order");
        o.require(std::abs(gs.nehari_value) < 1e-6, "Nehari < 1e-6");
        o.require(std::abs(gs.pohozaev_value) < 1e-6, "Pohozaev < 1e-6");
        o.require(gs.positive && gs.decreasing, "u positive and strictly decreasing");
    }
}

void uniqueness(Outcome& o)
{
    const double t = 1e-3;
    for (const ModelParams& m : {d3, d4}) {
        const FixedPointConfig cfg = config_for(m, fine_grid);
        const ProblemSetup ps = setup_for(m, t, cfg);
        const FixedPointState st = solve_fixed_point(ps, t, cfg);
        const GroundState gs = assemble_ground_state(ps, st);
        ShootingOptions opt;
        const ShootingResult sh =
            find_ground_state_shooting(m, gs.alpha, t, ps.profiles->grid, gs.u.values(0), opt);
        const double agree = compare_profiles(gs.u, sh.profile, ps.q).linf_rel;
        o.detail << " d=" << m.d << " oracle linf=" << agree;
        o.require(agree < 1e-5, "oracle agreement, d=" + std::to_string(m.d));

        if (m.d == 3) {
            const auto [lo, hi] = interval_I(t, ps.Kp, ps.A1);
            const FixedPointState a = solve_fixed_point(ps, t, cfg, StartPoint{lo, 0.0 * st.eta});
            const FixedPointState b = solve_fixed_point(ps, t, cfg, StartPoint{hi, 1.1 * st.eta});
            const double dtau = std::abs(a.tau - b.tau) / a.tau;
            const double deta = lq_norm(a.eta - b.eta, ps.q) / lq_norm(a.eta, ps.q);
            o.detail << " starts: dtau=" << dtau << " deta=" << deta;
            o.require(dtau < 1e-8 && deta < 1e-8, "two starts agree to 1e-8");
        }
    }
}

void bridge(Outcome& o)
{
    FixedPointConfig coarse;
    FixedPointConfig finer;
    finer.grid = GridSpec{1024, 4096, 0};
    const BridgeResult b = bridge_omega(d3, 1e4, coarse);
    const BridgeResult b_fine = bridge_omega(d3, 1e4, finer);
    const double p = order(b.residual_original_rel, b_fine.residual_original_rel);
    o.detail << " t(omega)=" << b_fine.t_of_omega << " match=" << b_fine.match_residual
             << " residual order=" << p << " nehari=" << b_fine.nehari_original
             << " roundtrip=" << b_fine.omega_roundtrip_rel;
    for (const BridgeResult* r : {&b, &b_fine}) {
        o.require(r->match_residual < 1e-10, "matching residual < 1e-10");
        o.require(std::abs(r->nehari_original) < 1e-5, "Nehari < 1e-5");
        o.require(r->omega_roundtrip_rel < 1e-8, "omega round trip < 1e-8");
    }
    o.require(p >= 1.9, "residual second order");
}

void alpha_beta(Outcome& o)
{
    double worst = 0;
    for (const ModelParams& m : {d3, d4})
        for (int k = 0; k <= 800; ++k) {
            const double s = std::pow(10.0, -8.0 + 0.01 * k);
            worst = std::max(worst, std::abs(alpha(m, beta(m, s)) / s - 1));
        }
    double lo = 1e300, hi = 0;
    for (int k = 0; k <= 790; ++k) {
        const double t = std::pow(10.0, -8.0 + 0.01 * k);
        const double ratio = alpha(d4, t) * std::log1p(1.0 / t) / t;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    o.detail << " round trip " << worst << " d=4 ratio in [" << lo << ", " << hi << "]";
    o.require(worst < 1e-11, "alpha(beta(s)) = s to 1e-11");
    o.require(lo >= 0.5 && hi <= 2.0, "ratio in [0.5, 2]");
}

} // namespace

int main()
{
    bool all = true;
    all &= run(1, 1.0, fourier);
    all &= run(2, 10.0, identities);
    all &= run(3, 30.0, spectrum);
    all &= run(4, 120.0, dichotomy);
    all &= run(5, 300.0, convergence);
    all &= run(6, 3 * 60.0, ground_state_quality);
    all &= run(7, 300.0, uniqueness);
    all &= run(8, 600.0, bridge);
    all &= run(9, 1.0, alpha_beta);
    return all ? 0 : 1;
}
