#include "cgs/nonlinear.hpp"
#include "cgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace cgs {

namespace {

std::optional<double> min_tail(std::optional<double> a, std::optional<double> b)
{
    if (a && b)
        return std::min(*a, *b);
    return a ? a : b;
}

std::optional<double> shifted_tail(std::optional<double> base, double extra)
{
    if (!base)
        return std::nullopt;
    return *base + extra;
}

void same_grid(const RadialFunction& a, const RadialFunction& b)
{
    if (a.grid != b.grid)
        throw DomainError("nonlinear terms need a shared grid");
}

} // namespace

RadialFunction eval_N(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta, double t)
{
    same_grid(W, eta);
    const double c = m.critical_power(), a = m.linear_power(), p = m.p;
    Eigen::VectorXd v(eta.values.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double w = W.values(i), e = eta.values(i), u = w + e;
        v(i) = signed_pow(u, c) - std::pow(w, c) - c * std::pow(w, a) * e + t * (signed_pow(u, p) - std::pow(w, p));
    }
    return {eta.grid, std::move(v), shifted_tail(eta.tail_exponent, (p - 1.0) * (m.d - 2))};
}

RadialFunction eval_F(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta, double s, double t)
{
    RadialFunction out = eval_N(m, W, eta, t);
    const Eigen::VectorXd Wp = W.values.array().pow(m.p);
    out.values += -s * W.values + t * Wp;
    if (s != 0)
        out.tail_exponent = min_tail(out.tail_exponent, m.d - 2.0);
    if (t != 0)
        out.tail_exponent = min_tail(out.tail_exponent, m.p * (m.d - 2));
    return out;
}

RadialFunction eval_D(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta1,
                      const RadialFunction& eta2)
{
    same_grid(eta1, eta2);
    same_grid(W, eta1);
    const double c = m.critical_power(), a = m.linear_power();
    Eigen::VectorXd v(eta1.values.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double w = W.values(i), e1 = eta1.values(i), e2 = eta2.values(i);
        v(i) = signed_pow(w + e1, c) - signed_pow(w + e2, c) - c * std::pow(w, a) * (e1 - e2);
    }
    return {eta1.grid, std::move(v),
            shifted_tail(min_tail(eta1.tail_exponent, eta2.tail_exponent), (c - 1.0) * (m.d - 2))};
}

RadialFunction eval_E(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta1,
                      const RadialFunction& eta2)
{
    same_grid(eta1, eta2);
    same_grid(W, eta1);
    Eigen::VectorXd v(eta1.values.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double w = W.values(i);
        v(i) = signed_pow(w + eta1.values(i), m.p) - signed_pow(w + eta2.values(i), m.p);
    }
    return {eta1.grid, std::move(v),
            shifted_tail(min_tail(eta1.tail_exponent, eta2.tail_exponent), (m.p - 1.0) * (m.d - 2))};
}

RadialFunction eval_N(const ModelParams& m, const RadialFunction& eta, double t)
{
    return eval_N(m, sample_W(m, eta.grid), eta, t);
}

RadialFunction eval_F(const ModelParams& m, const RadialFunction& eta, double s, double t)
{
    return eval_F(m, sample_W(m, eta.grid), eta, s, t);
}

namespace {

double power_integral(const RadialFunction& u, double r)
{
    RadialFunction a = signed_power(u, r);
    a.values = a.values.cwiseAbs();
    return integrate(a);
}

} // namespace

EnergyParts energy_parts(const ModelParams& m, const RadialFunction& u, double shift)
{
    const RadialGrid& g = *u.grid;
    EnergyParts e;
    if (u.values.cwiseAbs().maxCoeff() == 0)
        return e;
    std::optional<double> grad_tail;
    if (u.tail_exponent)
        grad_tail = 2.0 * (*u.tail_exponent + 1.0);
    e.grad_sq = integrate(RadialFunction(u.grid, derivative(u).cwiseAbs2(), grad_tail));
    if (shift > 0)
        e.mass_sq = power_integral(u, 2.0);
    if (!u.tail_exponent) {
        // Exterior of the Robin closure: int_R^inf |u'|^2 = kappa u(R)^2 for the matched decay.
        const double uR = u.values(u.values.size() - 1);
        const double kappa = far_field_kappa(g, shift, shift > 0 ? FarField::yukawa : FarField::zero_energy);
        e.grad_sq += sphere_area(g.d) * std::pow(g.r_max, g.d - 1) * kappa * uR * uR;
    }
    e.sub = power_integral(u, m.p + 1.0);
    e.crit = power_integral(u, m.two_star);
    return e;
}

double nehari(const ModelParams& m, const RadialFunction& u, const FunctionalMode& mode)
{
    const EnergyParts e = energy_parts(m, u, mode.shift);
    return mode.shift * e.mass_sq + e.grad_sq - mode.coupling * e.sub - e.crit;
}

double action(const ModelParams& m, const RadialFunction& u, const FunctionalMode& mode)
{
    const EnergyParts e = energy_parts(m, u, mode.shift);
    return 0.5 * mode.shift * e.mass_sq + 0.5 * e.grad_sq - mode.coupling / (m.p + 1.0) * e.sub -
           e.crit / m.two_star;
}

double pohozaev_residual(const ModelParams& m, const RadialFunction& u, double alpha, double t)
{
    if (u.values.cwiseAbs().maxCoeff() == 0)
        return 0.0;  // 0/0 by convention
    const EnergyParts e = energy_parts(m, u, alpha);
    const double lhs = alpha * e.mass_sq / m.d;
    const double rhs = (m.two_star - (m.p + 1.0)) / (m.two_star * (m.p + 1.0)) * t * e.sub;
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale > 0 ? (lhs - rhs) / scale : 0.0;
}

double pde_residual(const ModelParams& m, const RadialFunction& u, double shift, double coupling)
{
    const Eigen::VectorXd lap = minus_laplacian_fd(u);
    double worst = 0;
    for (Eigen::Index i = 0; i + 1 < lap.size(); ++i) {
        const double x = u.values(i);
        const double r = lap(i) + shift * x - coupling * signed_pow(x, m.p) - signed_pow(x, m.critical_power() );
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

KpValue compute_Kp_detailed(const ModelParams& m)
{
    KpValue k;
    k.closed_form = (4.0 - (m.d - 2) * (m.p - 1.0)) / (2.0 * (m.p + 1.0)) * w_power_integral(m, m.p + 1.0);
    const GridPtr g = build_grid(m.d, 1000.0, 512, 2048);
    k.quadrature = -inner(signed_power(sample_W(m, g), m.p), sample_LambdaW(m, g));
    const double rel = std::abs(k.quadrature - k.closed_form) / std::abs(k.closed_form);
    if (!(rel <= 1e-7))
        throw QuadratureError("K_p closed form and quadrature differ by " + std::to_string(rel));
    return k;
}

double compute_Kp(const ModelParams& m) { return compute_Kp_detailed(m).closed_form; }

} // namespace cgs
