#include "cgs/closed_forms.hpp"
#include "cgs/errors.hpp"
#include "cgs/fixed_point.hpp"
#include "cgs/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cgs;

namespace {
const ModelParams d3 = ModelParams::make(3, 4.0);

struct Reference {
    ProblemSetup ps;
    GroundState gs;
};

const Reference& reference()
{
    static const Reference ref = [] {
        FixedPointConfig cfg;
        cfg.Kp = compute_Kp(d3);
        cfg.A1 = compute_A1(d3, cfg.grid).value;
        Reference out;
        out.ps = ProblemSetup::make(d3, grid_for_t(d3, 1e-3, *cfg.Kp, *cfg.A1, cfg.grid), cfg);
        out.gs = assemble_ground_state(out.ps, solve_fixed_point(out.ps, 1e-3, cfg));
        return out;
    }();
    return ref;
}
} // namespace

TEST_CASE("profile comparison")
{
    const GridPtr g = build_grid(3, 100.0, 64, 128);
    const RadialFunction gauss = sample(g, [](double r) { return std::exp(-r * r); });
    const ProfileComparison same = compare_profiles(gauss, gauss);
    CHECK(same.linf_rel == 0.0);
    CHECK(same.lq_rel == 0.0);
    const ProfileComparison off = compare_profiles(gauss, 1.01 * gauss);
    CHECK(off.linf_rel == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(off.lq_rel == doctest::Approx(0.01).epsilon(1e-12));
    const RadialFunction W = sample_W(d3, g);
    CHECK_THROWS_AS(compare_profiles(W, 1.01 * W), DivergenceError);
    const ProfileComparison heavy = compare_profiles(W, 1.01 * W, 12.0);
    CHECK(heavy.linf_rel == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(heavy.lq_rel == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("shot classification")
{
    const Reference& ref = reference();
    const double s = ref.gs.alpha, t = ref.gs.t;
    const GridPtr g = ref.ps.profiles->grid;

    // Small heights follow the regular linear mode, which turns upward.
    const ShootingResult tiny = shoot(d3, s, t, 1e-6, g);
    CHECK(tiny.classified == ShotClass::blew_up);
    CHECK(tiny.profile.values(0) > 0);

    const ShootingResult tall = shoot(d3, s, t, 100.0, g);
    CHECK(tall.classified == ShotClass::crossed_zero);

    // One switch from undershoot to overshoot along increasing heights.
    std::vector<ShotClass> fates;
    for (double u0 : {1e-3, 0.1, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 10.0})
        fates.push_back(shoot(d3, s, t, u0, g).classified);
    int switches = 0;
    for (size_t i = 1; i < fates.size(); ++i)
        switches += fates[i] != fates[i - 1];
    CHECK(switches == 1);
    CHECK(fates.front() == ShotClass::blew_up);
    CHECK(fates.back() == ShotClass::crossed_zero);

    CHECK_THROWS_AS(shoot(d3, 0.0, t, 1.0, g), DomainError);
}

TEST_CASE("separatrix against the fixed-point ground state")
{
    const Reference& ref = reference();
    const GroundState& gs = ref.gs;
    const ShootingResult sh = find_ground_state_shooting(d3, gs.alpha, gs.t, ref.ps.profiles->grid, gs.u.values(0));
    CHECK(sh.classified == ShotClass::decayed);
    CHECK(sh.bisection_width < 1e-12 * sh.u0);
    CHECK(sh.profile.values.minCoeff() > 0);
    bool decreasing = true;
    for (Eigen::Index i = 1; i < sh.profile.values.size(); ++i)
        decreasing = decreasing && sh.profile.values(i) < sh.profile.values(i - 1);
    CHECK(decreasing);

    // The 1e-5 agreement is reached on the fine grid; the default grid carries the O(h^2) gap.
    const ProfileComparison c = compare_profiles(sh.profile, gs.u, 12.0);
    CHECK(c.linf_rel < 5e-4);

    CHECK(std::abs(pohozaev_residual(d3, sh.profile, gs.alpha, gs.t)) < 1e-6);
    const double neh = nehari(d3, sh.profile, FunctionalMode::rescaled(gs.alpha, gs.t));
    CHECK(std::abs(neh) < 1e-6 * energy_parts(d3, sh.profile, gs.alpha).grad_sq);
}

TEST_CASE("near the pure critical equation the shot is a rescaled W")
{
    // lambda^{1/2} W(lambda r) with height u0 = 2 needs lambda = 4.
    const GridPtr g = build_grid(3, 100.0, 512, 2048);
    const ShootingResult sh = shoot(d3, 1e-10, 1e-14, 2.0, g);
    double worst = 0;
    for (Eigen::Index i = 0; i < g->size() && g->nodes(i) <= 5.0; ++i)
        worst = std::max(worst, std::abs(sh.profile.values(i) - 2.0 * eval_W(d3, 4.0 * g->nodes(i))));
    CHECK(worst < 1e-8);
}

TEST_CASE("profile change shrinks with the integrator tolerance")
{
    const Reference& ref = reference();
    const double s = ref.gs.alpha, t = ref.gs.t;
    // Sparse output nodes so the step size is set by the tolerance.
    const GridPtr g = build_grid(3, 200.0, 16, 16);
    ShootingOptions tight;
    tight.rtol = 1e-13;
    const RadialFunction best = shoot(d3, s, t, 0.9, g, tight).profile;
    double prev = 1e300;
    for (double rtol : {1e-4, 1e-6, 1e-8}) {
        ShootingOptions opt;
        opt.rtol = rtol;
        const double change = (shoot(d3, s, t, 0.9, g, opt).profile.values - best.values).cwiseAbs().maxCoeff();
        CHECK(change < prev);
        CHECK(change < 100 * rtol);
        prev = change;
    }
}
