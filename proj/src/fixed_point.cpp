#include "cgs/fixed_point.hpp"
#include "cgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace cgs {

double default_q(const ModelParams& m)
{
    const double ts = m.two_star;
    const double need = std::max({ts, ts / (m.p - 1.0), ts / (m.p + 3.0 - ts)});
    return std::ceil(2.0 * need);
}

ProblemSetup ProblemSetup::make(const ModelParams& m, const GridPtr& grid, const FixedPointConfig& cfg)
{
    ProblemSetup ps;
    ps.params = m;
    ps.profiles = Profiles::make(m, grid);
    ps.Wp = signed_power(ps.profiles->W, m.p);
    ps.Kp = cfg.Kp ? *cfg.Kp : compute_Kp(m);
    ps.A1 = cfg.A1 ? *cfg.A1 : compute_A1(m, cfg.grid).value;
    ps.q = cfg.q > 0 ? cfg.q : default_q(m);
    ps.exps = compute_exponents(m, ps.q);
    return ps;
}

GridPtr grid_for_t(const ModelParams& m, double t, double Kp, double A1, const GridSpec& spec)
{
    return make_grid(m.d, spec, alpha(m, Kp / A1 * t));
}

SMapParts s_map_parts(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta)
{
    const Profiles& p = *ps.profiles;
    const double s = alpha(ps.params, tau);
    const FreeResolvent R(p.grid, s);
    SMapParts out;
    out.X = delta(ps.params, s) * inner(R.apply(p.W), p.psi);
    out.Wp = inner(R.apply(ps.Wp), p.psi);
    out.Nn = inner(R.apply(eval_N(ps.params, p.W, eta, t)), p.psi);
    if (!(std::abs(out.X) >= 1e-12))
        throw DegeneracyError("|X(tau)| below 1e-12 at tau = " + std::to_string(tau));
    out.value = (t * out.Wp + out.Nn) / out.X;
    return out;
}

double s_map(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta)
{
    return s_map_parts(ps, t, tau, eta).value;
}

RadialFunction g_map(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta)
{
    const Profiles& p = *ps.profiles;
    const double s = alpha(ps.params, tau);
    const FreeResolvent R(p.grid, s);
    const RadialFunction y = R.apply(eval_F(ps.params, p.W, eta, s, t));
    return PerturbedInverse(ps.profiles, s).apply(y);
}

double calibrate_R(const ProblemSetup& ps, double t0)
{
    const RadialFunction zero(ps.profiles->grid, Eigen::VectorXd::Zero(ps.profiles->grid->size()));
    const RadialFunction g = g_map(ps, t0, ps.Kp / ps.A1 * t0, zero);
    return 10.0 * lq_norm(g, ps.q) / std::pow(alpha(ps.params, t0), ps.exps.theta_big);
}

namespace {

// Damped iteration tau <- (1-theta) tau + theta s(tau), run to the rounding floor.
double solve_tau(const ProblemSetup& ps, double t, double tau, const RadialFunction& eta,
                 const FixedPointConfig& cfg, int& iters)
{
    double best = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int i = 0; i < cfg.max_inner; ++i) {
        const double s = s_map(ps, t, tau, eta);
        if (!(s > 0) || (ps.params.d == 4 && !(s < 1)))
            throw DivergenceError("tau iteration left the domain of alpha (s = " + std::to_string(s) + ")");
        const double r = std::abs(s - tau);
        ++iters;
        if (r <= 1e-15 * tau)
            return s;
        if (r < best) {
            best = r;
            stalled = 0;
        } else if (++stalled >= 8) {
            return tau;
        }
        tau = (1.0 - cfg.damping) * tau + cfg.damping * s;
    }
    if (best > cfg.tol_tau * tau)
        throw IterationError("tau iteration did not reach " + std::to_string(cfg.tol_tau));
    return tau;
}

std::string ratio_trace(const std::vector<double>& r)
{
    std::ostringstream os;
    const size_t from = r.size() > 6 ? r.size() - 6 : 0;
    for (size_t i = from; i < r.size(); ++i)
        os << (i > from ? ", " : "") << r[i];
    return os.str();
}

} // namespace

FixedPointState solve_fixed_point(const ProblemSetup& ps, double t, const FixedPointConfig& cfg,
                                  const std::optional<StartPoint>& start)
{
    if (!(t > 0))
        throw DomainError("t must be positive");
    const GridPtr& grid = ps.profiles->grid;
    FixedPointState st;
    st.t = t;
    st.q = ps.q;
    st.Kp = ps.Kp;
    st.A1 = ps.A1;
    st.exps = ps.exps;
    st.R = cfg.R > 0 ? cfg.R : calibrate_R(ps, t);

    double tau = start ? start->tau : ps.Kp / ps.A1 * t;
    RadialFunction eta = start ? start->eta : RadialFunction(grid, Eigen::VectorXd::Zero(grid->size()));
    const double floor_ref = std::pow(alpha(ps.params, t), ps.exps.theta_big);

    double prev_diff = 0, prev_tau = tau;
    int growing = 0;
    for (int k = 1; k <= cfg.max_outer; ++k) {
        tau = solve_tau(ps, t, tau, eta, cfg, st.inner_iters);
        RadialFunction next = g_map(ps, t, tau, eta);
        const double diff = lq_norm(next - eta, ps.q);
        const double ref = std::max(lq_norm(next, ps.q), floor_ref);
        st.iter_count = k;
        // Ratios near the rounding floor are noise; only steps well above the tolerance count.
        const double floor_diff = 100.0 * cfg.tol_eta * ref;
        const bool meaningful = prev_diff > floor_diff && diff > floor_diff;
        if (meaningful) {
            const double ratio = diff / prev_diff;
            st.ratios.push_back(ratio);
            st.contraction_ratio = ratio;
            st.max_contraction_ratio = std::max(st.max_contraction_ratio, ratio);
            growing = ratio >= 1.0 ? growing + 1 : 0;
            if (growing >= 5)
                throw DivergenceError("fixed point at t = " + std::to_string(t) +
                                      " does not contract; last ratios: " + ratio_trace(st.ratios) +
                                      " (try a smaller t)");
        }
        const bool tau_settled = std::abs(tau - prev_tau) <= cfg.tol_tau * tau;
        prev_diff = diff;
        prev_tau = tau;
        eta = std::move(next);
        if (diff <= cfg.tol_eta * ref && tau_settled && k > 1) {
            st.converged = true;
            break;
        }
    }

    tau = solve_tau(ps, t, tau, eta, cfg, st.inner_iters);
    st.tau = tau;
    st.eta = eta;
    st.eta_norm = lq_norm(eta, ps.q);
    st.tau_residual = std::abs(tau - s_map(ps, t, tau, eta)) / tau;
    st.eta_residual =
        lq_norm(eta - g_map(ps, t, tau, eta), ps.q) / std::max(st.eta_norm, floor_ref);
    const auto [lo, hi] = interval_I(t, ps.Kp, ps.A1);
    st.tau_in_I = tau >= lo && tau <= hi;
    st.eta_in_Y = st.eta_norm <= st.R * floor_ref;
    if (!st.converged)
        st.warning = "no convergence within " + std::to_string(cfg.max_outer) + " outer iterations";
    else if (!st.tau_in_I)
        st.warning = "tau escaped I(t)";
    else if (!st.eta_in_Y)
        st.warning = "eta escaped Y_q(R, t)";
    return st;
}

FixedPointState solve_fixed_point(const ModelParams& m, double t, const FixedPointConfig& cfg)
{
    FixedPointConfig c = cfg;
    if (!c.Kp)
        c.Kp = compute_Kp(m);
    if (!c.A1)
        c.A1 = compute_A1(m, c.grid).value;
    const ProblemSetup ps = ProblemSetup::make(m, grid_for_t(m, t, *c.Kp, *c.A1, c.grid), c);
    return solve_fixed_point(ps, t, c);
}

GroundState assemble_ground_state(const ProblemSetup& ps, const FixedPointState& state)
{
    const ModelParams& m = ps.params;
    GroundState gs;
    gs.t = state.t;
    gs.tau = state.tau;
    gs.alpha = alpha(m, state.tau);
    gs.u = RadialFunction(state.eta.grid, ps.profiles->W.values + state.eta.values);
    const Eigen::VectorXd& u = gs.u.values;
    gs.positive = (u.array() > 0).all();
    if (!gs.positive)
        throw PositivityError("assembled ground state is not positive");
    gs.decreasing = true;
    for (Eigen::Index i = 0; i + 1 < u.size(); ++i)
        if (!(u(i + 1) < u(i)))
            gs.decreasing = false;
    gs.pde_residual = pde_residual(m, gs.u, gs.alpha, gs.t);
    const EnergyParts e = energy_parts(m, gs.u, gs.alpha);
    gs.grad_sq = e.grad_sq;
    gs.nehari_value = nehari(m, gs.u, FunctionalMode::rescaled(gs.alpha, gs.t)) / e.grad_sq;
    gs.action_value = action(m, gs.u, FunctionalMode::rescaled(gs.alpha, gs.t));
    gs.pohozaev_value = pohozaev_residual(m, gs.u, gs.alpha, gs.t);
    return gs;
}

double bridge_exponent(const ModelParams& m) { return (m.two_star - 2.0) / (m.two_star - (m.p + 1.0)); }

namespace {

// Leading-order crossing: (Kp/A1) t = beta(omega t^k).
double predicted_crossing(const ModelParams& m, double omega, double ratio)
{
    const double k = bridge_exponent(m);
    auto G = [&](double t) {
        const double x = omega * std::pow(t, k);
        if (m.d == 4 && x >= 1e300)
            return -1.0;
        return ratio * t - beta(m, x);
    };
    double lo = 1e-14, hi = 1.0;
    if (!(G(lo) > 0 && G(hi) < 0))
        throw BracketError("omega too small: no leading-order crossing below t = 1");
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (G(mid) > 0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace

BridgeResult bridge_omega(const ModelParams& m, double omega, const FixedPointConfig& cfg)
{
    if (!(omega > 0))
        throw DomainError("omega must be positive");
    FixedPointConfig c = cfg;
    if (!c.Kp)
        c.Kp = compute_Kp(m);
    if (!c.A1)
        c.A1 = compute_A1(m, c.grid).value;
    const double k = bridge_exponent(m);
    const double t_pred = predicted_crossing(m, omega, *c.Kp / *c.A1);
    const ProblemSetup ps = ProblemSetup::make(m, grid_for_t(m, t_pred, *c.Kp, *c.A1, c.grid), c);
    if (c.R <= 0)
        c.R = calibrate_R(ps, 4.0 * t_pred);

    struct Eval {
        double t, G;
        FixedPointState st;
    };
    auto evaluate = [&](double t, const Eval* warm) {
        std::optional<StartPoint> start;
        if (warm)
            start = StartPoint{warm->st.tau * t / warm->t, warm->st.eta};
        FixedPointState st = solve_fixed_point(ps, t, c, start);
        if (!st.converged)
            throw IterationError("fixed point failed to converge during the omega bisection at t = " +
                                 std::to_string(t));
        const double x = omega * std::pow(t, k);
        if (m.d == 4 && !(x < 1e300))
            throw DomainError("omega t^k overflow");
        const double G = st.tau - beta(m, x);
        return Eval{t, G, std::move(st)};
    };

    Eval a = evaluate(t_pred / 2.0, nullptr);
    Eval b = evaluate(2.0 * t_pred, &a);
    if (a.G * b.G > 0) {
        a = evaluate(t_pred / 4.0, &a);
        b = evaluate(4.0 * t_pred, &b);
    }
    if (a.G * b.G > 0)
        throw BracketError("omega too small: G(t) has no sign change on [t*/4, 4 t*]");

    BridgeResult out;
    out.omega = omega;
    Eval best = std::abs(a.G) / a.st.tau < std::abs(b.G) / b.st.tau ? a : b;
    for (int i = 0; i < 200; ++i) {
        if (std::abs(best.G) <= 1e-10 * best.st.tau)
            break;
        const double mid = 0.5 * (a.t + b.t);
        if (mid == a.t || mid == b.t)
            break;
        Eval e = evaluate(mid, std::abs(mid - a.t) < std::abs(mid - b.t) ? &a : &b);
        ++out.bisection_steps;
        if (std::abs(e.G) / e.st.tau < std::abs(best.G) / best.st.tau)
            best = e;
        if (e.G * a.G > 0)
            a = std::move(e);
        else
            b = std::move(e);
    }

    const double t = best.t;
    out.t_of_omega = t;
    out.tau = best.st.tau;
    out.match_residual = std::abs(best.G) / best.st.tau;
    out.lambda_of_omega = std::pow(t, -1.0 / (m.two_star - (m.p + 1.0)));
    out.omega_roundtrip = alpha(m, best.st.tau) * std::pow(t, -k);
    out.omega_roundtrip_rel = std::abs(out.omega_roundtrip - omega) / omega;

    const GroundState gs = assemble_ground_state(ps, best.st);
    out.Phi = scale_exact(gs.u, 1.0 / out.lambda_of_omega);
    out.Phi.tail_exponent.reset();
    out.residual_original = pde_residual(m, out.Phi, omega, 1.0);
    out.residual_original_rel =
        out.residual_original / std::pow(out.Phi.values.cwiseAbs().maxCoeff(), m.critical_power());
    const EnergyParts ephi = energy_parts(m, out.Phi, omega);
    const double n_orig = nehari(m, out.Phi, FunctionalMode::original(omega));
    out.nehari_original = n_orig / ephi.grad_sq;
    const double n_resc = nehari(m, gs.u, FunctionalMode::rescaled(omega * std::pow(t, k), t));
    out.nehari_covariance_gap = std::abs(n_orig - n_resc) / gs.grad_sq;
    out.state = std::move(best.st);
    return out;
}

SweepReport sweep(const ModelParams& m, const std::vector<double>& t_values, const FixedPointConfig& cfg,
                  int parallel)
{
    if (t_values.empty())
        throw ConfigError("sweep needs at least one t");
    for (size_t i = 1; i < t_values.size(); ++i)
        if (!(t_values[i] < t_values[i - 1]))
            throw ConfigError("sweep t values must be strictly decreasing");
    FixedPointConfig c = cfg;
    if (!c.Kp)
        c.Kp = compute_Kp(m);
    if (!c.A1)
        c.A1 = compute_A1(m, c.grid).value;
    SweepReport rep;
    rep.Kp = *c.Kp;
    rep.A1 = *c.A1;
    rep.q = c.q > 0 ? c.q : default_q(m);
    if (c.R <= 0) {
        const ProblemSetup ps0 =
            ProblemSetup::make(m, grid_for_t(m, t_values.front(), *c.Kp, *c.A1, c.grid), c);
        c.R = calibrate_R(ps0, t_values.front());
    }
    rep.R = c.R;

    auto run = [&](double t) {
        SweepRecord rec;
        rec.t = t;
        try {
            const ProblemSetup ps = ProblemSetup::make(m, grid_for_t(m, t, *c.Kp, *c.A1, c.grid), c);
            const FixedPointState st = solve_fixed_point(ps, t, c);
            rec.ok = st.converged;
            if (!st.converged)
                rec.error = st.warning;
            rec.tau = st.tau;
            rec.tau_over_t = st.tau / t;
            rec.eta_norm = st.eta_norm;
            rec.eta_norm_scaled = st.eta_norm / std::pow(alpha(m, t), st.exps.theta_big);
            rec.tau_residual = st.tau_residual;
            rec.eta_residual = st.eta_residual;
            rec.max_contraction_ratio = st.max_contraction_ratio;
            rec.iterations = st.iter_count;
            rec.tau_in_I = st.tau_in_I;
            rec.eta_in_Y = st.eta_in_Y;
            const Eigen::VectorXd& r = ps.profiles->grid->nodes;
            const Eigen::VectorXd u = ps.profiles->W.values + st.eta.values;
            rec.decay_sup = ((1.0 + r.array()).pow(m.d - 2.0) * u.array().abs()).maxCoeff();
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        return rec;
    };

    rep.records.resize(t_values.size());
    const int workers = std::max(1, parallel);
    for (size_t first = 0; first < t_values.size(); first += workers) {
        std::vector<std::future<SweepRecord>> jobs;
        for (size_t i = first; i < std::min(t_values.size(), first + workers); ++i)
            jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run, t_values[i]));
        for (size_t i = 0; i < jobs.size(); ++i)
            rep.records[first + i] = jobs[i].get();
    }

    rep.tau_monotone = true;
    rep.ratio_gap_decreasing = true;
    const double target = rep.Kp / rep.A1;
    for (size_t i = 1; i < rep.records.size(); ++i) {
        const auto& prev = rep.records[i - 1];
        const auto& cur = rep.records[i];
        if (!(prev.ok && cur.ok && cur.tau < prev.tau))
            rep.tau_monotone = false;
        if (!(prev.ok && cur.ok && std::abs(cur.tau_over_t - target) < std::abs(prev.tau_over_t - target)))
            rep.ratio_gap_decreasing = false;
    }
    // Least-squares slope of log ||eta||_q against log alpha(t).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : rep.records) {
        if (!r.ok || !(r.eta_norm > 0))
            continue;
        const double x = std::log(alpha(m, r.t)), y = std::log(r.eta_norm);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2)
        rep.eta_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

} // namespace cgs
