#include "cgs/closed_forms.hpp"
#include "cgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cgs {

ModelParams ModelParams::make(int d, double p)
{
    if (d != 3 && d != 4)
        throw DomainError("dimension must be 3 or 4, got " + std::to_string(d));
    const double lo = 4.0 / (d - 2) - 1.0;
    const double hi = (d + 2.0) / (d - 2.0);
    if (!(p > lo && p < hi))
        throw DomainError("p = " + std::to_string(p) + " outside (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ") for d = " + std::to_string(d));
    ModelParams m;
    m.d = d;
    m.p = p;
    m.two_star = 2.0 * d / (d - 2.0);
    return m;
}

double gamma_fn(double x) { return std::tgamma(x); }

double sphere_area(int d)
{
    return 2.0 * std::pow(std::numbers::pi, d / 2.0) / gamma_fn(d / 2.0);
}

double delta(const ModelParams& m, double s)
{
    if (!(s > 0))
        throw DomainError("delta requires s > 0");
    if (m.d == 3)
        return std::sqrt(s);
    return 1.0 / std::log1p(1.0 / s);
}

double beta(const ModelParams& m, double s)
{
    if (!(s > 0))
        throw DomainError("beta requires s > 0");
    if (m.d == 3)
        return std::sqrt(s);
    return s * std::log1p(1.0 / s);
}

namespace {

double beta4_prime(double s) { return std::log1p(1.0 / s) - 1.0 / (1.0 + s); }

double alpha4(double t)
{
    auto b = [](double s) { return s * std::log1p(1.0 / s); };
    // beta(s) < 1 always and beta(s) > s for s < 0.58, so alpha(t) < t there.
    double lo = t, hi = t;
    while (b(lo) > t)
        lo *= 0.5;
    while (b(hi) < t) {
        hi *= 2.0;
        if (hi > 1e300)
            throw DomainError("alpha: t too close to 1");
    }
    // Bisect in log s to a modest bracket, then polish with Newton.
    for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-6; ++i) {
        const double mid = std::sqrt(lo * hi);
        (b(mid) < t ? lo : hi) = mid;
    }
    double s = std::sqrt(lo * hi);
    for (int i = 0; i < 50; ++i) {
        const double step = (b(s) - t) / beta4_prime(s);
        double next = s - step;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        (b(next) < t ? lo : hi) = next;
        const bool done = std::abs(next - s) <= 1e-14 * std::abs(next);
        s = next;
        if (done)
            break;
    }
    return s;
}

} // namespace

double alpha(const ModelParams& m, double t)
{
    if (!(t > 0))
        throw DomainError("alpha requires t > 0");
    if (m.d == 3)
        return t * t;
    if (!(t < 1))
        throw DomainError("alpha: d = 4 requires t < 1 (beta never reaches 1)");
    return alpha4(t);
}

std::pair<double, double> interval_I(double t, double Kp, double A1)
{
    return {Kp * t / (2.0 * A1), 3.0 * Kp * t / (2.0 * A1)};
}

Exponents compute_exponents(const ModelParams& m, double q)
{
    const int d = m.d;
    const double need = std::max(m.two_star, m.two_star / (m.p - 1.0));
    if (!(q > need))
        throw DomainError("q = " + std::to_string(q) + " must exceed " + std::to_string(need));
    Exponents e;
    e.q = q;
    e.theta_big = (d - 2) / 2.0 - d / (2.0 * q);
    if (m.p >= d / (d - 2.0))
        e.nu = d / (2.0 * q);
    else
        e.nu = 1.0 - (d - 2) * (m.p - 1.0) / 4.0;
    const double a = e.theta_big - e.nu;
    const double b = e.theta_big + (d - 2) * (m.p - 1.0) / 2.0 - 1.0;
    if (!(a > 0 && b > 0))
        throw DomainError("exponents not positive for q = " + std::to_string(q));
    e.theta_small = 0.5 * std::min(a, b);
    return e;
}

double w_power_integral(const ModelParams& m, double r)
{
    const int d = m.d;
    const double c = d * (d - 2.0);
    const double decay = r * (d - 2) / 2.0;
    if (!(decay > d / 2.0))
        throw DivergenceError("W not in L^" + std::to_string(r));
    const double a = d / 2.0, b = decay - d / 2.0;
    const double beta_ab = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return sphere_area(d) * std::pow(c, d / 2.0) * 0.5 * beta_ab;
}

double w_power_lambda_pairing(const ModelParams& m, double r)
{
    const int d = m.d;
    return -(4.0 - (d - 2) * (r - 1.0)) / (2.0 * (r + 1.0)) * w_power_integral(m, r + 1.0);
}

double kp_closed_form(const ModelParams& m) { return -w_power_lambda_pairing(m, m.p); }

double a1_closed_form(const ModelParams& m)
{
    const int d = m.d;
    const double pi = std::numbers::pi;
    const double cw = std::pow(d * (d - 2.0), (d - 2) / 2.0);
    const double kernel = 4.0 * std::pow(pi, d / 2.0) / gamma_fn((d - 2) / 2.0);
    const double fourier_zero = (d - 2) / 2.0 * w_power_integral(m, m.critical_power());
    return std::pow(2.0 * pi, -d) * cw * kernel * (5 - d) * pi * pi * fourier_zero;
}

double fourier_ball_integral(int d, double s)
{
    if (!(s > 0))
        throw DomainError("fourier_ball_integral requires s > 0");
    const double pi = std::numbers::pi;
    if (d == 3)
        return 4.0 * pi / std::sqrt(s) * std::atan(1.0 / std::sqrt(s));
    if (d == 4)
        return 2.0 * pi * pi * 0.5 * std::log1p(1.0 / s);
    throw DomainError("fourier_ball_integral: d must be 3 or 4");
}

} // namespace cgs
