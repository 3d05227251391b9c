#include "cgs/oracle.hpp"
#include "cgs/errors.hpp"
#include "cgs/resolvent.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace cgs {

const char* to_string(ShotClass c)
{
    switch (c) {
    case ShotClass::decayed: return "decayed";
    case ShotClass::crossed_zero: return "crossed_zero";
    case ShotClass::blew_up: return "blew_up";
    }
    return "?";
}

namespace {

using State = std::array<double, 2>;  // (u, u')

struct Rhs {
    int d;
    double p, crit, s, t;
    State operator()(double r, const State& y) const
    {
        const double u = y[0];
        const double f = s * u - t * std::copysign(std::pow(std::abs(u), p), u) -
                         std::copysign(std::pow(std::abs(u), crit), u);
        return {y[1], f - (d - 1) / r * y[1]};
    }
};

// Dormand-Prince 5(4) with PI-free standard step control.
class Dopri5 {
public:
    Dopri5(const Rhs& f, double rtol, double atol) : f_(f), rtol_(rtol), atol_(atol) {}

    // Advances (r, y) to r_end unless an event stops it; returns false on event.
    template <typename Event>
    bool advance(double& r, State& y, double r_end, double& h, Event&& event)
    {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                                b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;
        while (r < r_end) {
            bool last = false;
            if (r + h >= r_end) {
                h = r_end - r;
                last = true;
            }
            if (h < 1e-14 * r)
                throw IntegrationError("shooting step size underflow at r = " + std::to_string(r));
            const State k1 = f_(r, y);
            auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
                State z = y;
                for (const auto& [c, k] : terms)
                    for (int i = 0; i < 2; ++i)
                        z[i] += h * c * (*k)[i];
                return z;
            };
            const State k2 = f_(r + c2 * h, comb({{a21, &k1}}));
            const State k3 = f_(r + c3 * h, comb({{a31, &k1}, {a32, &k2}}));
            const State k4 = f_(r + c4 * h, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
            const State k5 = f_(r + c5 * h, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
            const State k6 = f_(r + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
            const State yn = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
            const State k7 = f_(r + h, yn);
            double err = 0;
            for (int i = 0; i < 2; ++i) {
                const double ei =
                    h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double sc = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(yn[i]));
                err = std::max(err, std::abs(ei) / sc);
            }
            const double factor = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                r = last ? r_end : r + h;
                y = yn;
                if (!last)
                    h *= factor;
                if (event(r, y))
                    return false;
            } else {
                h *= factor;
            }
        }
        return true;
    }

private:
    Rhs f_;
    double rtol_, atol_;
};

struct Trajectory {
    Eigen::VectorXd values;  // NaN after the event
    ShotClass fate = ShotClass::decayed;
    double event_radius = std::numeric_limits<double>::infinity();
};

// Fate over [0, r_stop]: undershoot (turns upward or exceeds 10 u0) or overshoot (crosses zero).
Trajectory integrate(const ModelParams& m, double s, double t, double u0, const Eigen::VectorXd& nodes,
                     double r_stop, const ShootingOptions& opt)
{
    const int d = m.d;
    const Rhs f{d, m.p, m.critical_power(), s, t};
    Trajectory tr;
    tr.values = Eigen::VectorXd::Constant(nodes.size(), std::numeric_limits<double>::quiet_NaN());
    tr.values(0) = u0;

    // Series u = u0 + a r^2 + b r^4 about the regular origin.
    const double f0 = s * u0 - t * std::pow(u0, m.p) - std::pow(u0, m.critical_power());
    const double df0 = s - t * m.p * std::pow(u0, m.p - 1) - m.critical_power() * std::pow(u0, m.critical_power() - 1);
    const double a = f0 / (2.0 * d);
    const double b = df0 * a / (4.0 * (d + 2));
    // Start where the r^2 term is still a 1e-6 correction; tall shots live on a short length scale.
    double r0 = std::min(nodes.size() > 1 ? nodes(1) : 1e-3, 1e-3);
    if (a != 0)
        r0 = std::min(r0, std::sqrt(1e-6 * u0 / std::abs(a)));
    State y{u0 + a * r0 * r0 + b * std::pow(r0, 4), 2 * a * r0 + 4 * b * std::pow(r0, 3)};
    double r = r0;
    double h = r0;
    Dopri5 solver(f, opt.rtol, opt.atol);
    auto event = [&](double rr, const State& yy) {
        if (yy[0] <= 0) {
            tr.fate = ShotClass::crossed_zero;
            tr.event_radius = rr;
            return true;
        }
        if (yy[1] > 0 || yy[0] > 10.0 * u0) {
            tr.fate = ShotClass::blew_up;
            tr.event_radius = rr;
            return true;
        }
        return false;
    };
    if (event(r, y))
        return tr;
    Eigen::Index next = 1;
    while (next < nodes.size() && nodes(next) < r0)
        ++next;
    if (next < nodes.size() && nodes(next) == r0)
        tr.values(next++) = y[0];
    const double r_last = std::max(r_stop, nodes.size() ? nodes(nodes.size() - 1) : 0.0);
    while (r < r_last) {
        const double target = next < nodes.size() ? std::min(nodes(next), r_last) : r_last;
        if (!solver.advance(r, y, target, h, event))
            return tr;
        if (next < nodes.size() && r == nodes(next))
            tr.values(next++) = y[0];
    }
    return tr;
}

double classification_radius(double s) { return 8.0 / std::sqrt(s); }

// Far enough that any trajectory off the separatrix has departed.
double fate_radius(double s) { return 40.0 / std::sqrt(s); }

} // namespace

ShootingResult shoot(const ModelParams& m, double s, double t, double u0, const GridPtr& grid,
                     const ShootingOptions& opt)
{
    if (!(s > 0 && t > 0 && u0 > 0))
        throw DomainError("shoot requires positive s, t, u0");
    const Trajectory tr = integrate(m, s, t, u0, grid->nodes, classification_radius(s), opt);
    ShootingResult res;
    res.u0 = u0;
    res.shots = 1;
    res.event_radius = tr.event_radius;
    res.classified = tr.event_radius <= classification_radius(s) ? tr.fate : ShotClass::decayed;
    res.profile = RadialFunction(grid, tr.values);
    return res;
}

ShootingResult shoot(const ModelParams& m, double s, double t, double u0)
{
    return shoot(m, s, t, u0, make_grid(m.d, GridSpec{}, s));
}

ShootingResult find_ground_state_shooting(const ModelParams& m, double s, double t, const GridPtr& grid,
                                          double expected_height, const ShootingOptions& opt)
{
    if (!(s > 0 && t > 0 && expected_height > 0))
        throw DomainError("find_ground_state_shooting requires positive s, t and height");
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(1);
    const double r_fate = fate_radius(s);
    int shots = 0;
    auto fate = [&](double u0) {
        ++shots;
        const ShotClass c = integrate(m, s, t, u0, origin, r_fate, opt).fate;
        if (c == ShotClass::decayed)
            throw IntegrationError("shot at u0 = " + std::to_string(u0) + " did not leave the separatrix");
        return c;
    };

    // Geometric scan; the fates must switch exactly once, undershoot below overshoot.
    const double lo0 = opt.scan_low * expected_height, hi0 = opt.scan_high * expected_height;
    std::vector<double> u0s(opt.scan_points);
    std::vector<ShotClass> fates(opt.scan_points);
    for (int i = 0; i < opt.scan_points; ++i) {
        u0s[i] = lo0 * std::pow(hi0 / lo0, double(i) / (opt.scan_points - 1));
        fates[i] = fate(u0s[i]);
    }
    int switches = 0, at = -1;
    for (int i = 1; i < opt.scan_points; ++i)
        if (fates[i] != fates[i - 1]) {
            ++switches;
            at = i;
        }
    if (switches != 1 || fates[at - 1] != ShotClass::blew_up || fates[at] != ShotClass::crossed_zero)
        throw BracketError("no undershoot/overshoot dichotomy in the u0 scan");

    double lo = u0s[at - 1], hi = u0s[at];
    while (hi - lo >= opt.width_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        (fate(mid) == ShotClass::blew_up ? lo : hi) = mid;
    }

    // Both bracket ends track the separatrix across the grid; merge them.
    const Trajectory a = integrate(m, s, t, lo, grid->nodes, classification_radius(s), opt);
    const Trajectory b = integrate(m, s, t, hi, grid->nodes, classification_radius(s), opt);
    shots += 2;
    const Eigen::Index n = grid->size();
    Eigen::VectorXd u(n);
    Eigen::Index last_valid = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool va = std::isfinite(a.values(i)), vb = std::isfinite(b.values(i));
        if (va && vb)
            u(i) = 0.5 * (a.values(i) + b.values(i));
        else if (va || vb)
            u(i) = va ? a.values(i) : b.values(i);
        else
            break;
        last_valid = i;
    }
    if (last_valid < 1)
        throw IntegrationError("shooting profile terminated at the origin");
    // Past both events continue with the Yukawa decay.
    const Eigen::VectorXd& r = grid->nodes;
    for (Eigen::Index i = last_valid + 1; i < n; ++i)
        u(i) = u(last_valid) * std::pow(r(last_valid) / r(i), 0.5 * (m.d - 1)) *
               std::exp(-std::sqrt(s) * (r(i) - r(last_valid)));

    ShootingResult res;
    res.u0 = 0.5 * (lo + hi);
    res.bisection_width = hi - lo;
    res.shots = shots;
    res.event_radius = std::min(a.event_radius, b.event_radius);
    res.classified = res.event_radius <= classification_radius(s) ? a.fate : ShotClass::decayed;
    res.profile = RadialFunction(grid, std::move(u));
    return res;
}

ProfileComparison compare_profiles(const RadialFunction& u1, const RadialFunction& u2, double q)
{
    if (u1.grid != u2.grid)
        throw DomainError("compare_profiles needs a common grid");
    ProfileComparison c;
    const double scale = u1.values.cwiseAbs().maxCoeff();
    if (scale == 0)
        return c;
    c.linf_rel = (u1.values - u2.values).cwiseAbs().maxCoeff() / scale;
    RadialFunction diff(u1.grid, u1.values - u2.values);
    RadialFunction base = u1;
    if (u1.tail_exponent && u2.tail_exponent)
        diff.tail_exponent = std::min(*u1.tail_exponent, *u2.tail_exponent);
    const double nb = lq_norm(base, q);
    c.lq_rel = nb > 0 ? lq_norm(diff, q) / nb : 0.0;
    return c;
}

} // namespace cgs
