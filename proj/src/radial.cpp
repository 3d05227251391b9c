#include "cgs/radial.hpp"
#include "cgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cgs {

namespace {

// h0 (q^n - 1)/(q - 1) = length, solved for the growth ratio q.
double geometric_ratio(double h0, int n, double length)
{
    auto total = [&](double q) {
        if (std::abs(q - 1.0) < 1e-14)
            return h0 * n;
        return h0 * std::expm1(n * std::log(q)) / (q - 1.0);
    };
    double lo = 1e-3, hi = 2.0;
    while (total(hi) < length)
        hi *= 2.0;
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < length ? lo : hi) = mid;
        if (hi - lo < 1e-16 * hi)
            break;
    }
    return 0.5 * (lo + hi);
}

void add_simpson_pair(Eigen::VectorXd& w, const Eigen::VectorXd& x, Eigen::Index i)
{
    const double h0 = x(i + 1) - x(i), h1 = x(i + 2) - x(i + 1), hs = h0 + h1;
    w(i) += hs / 6.0 * (2.0 - h1 / h0);
    w(i + 1) += hs * hs * hs / (6.0 * h0 * h1);
    w(i + 2) += hs / 6.0 * (2.0 - h0 / h1);
}

double tail_integral(int d, double R, double c, double gamma)
{
    return sphere_area(d) * c * std::pow(R, d - gamma) / (gamma - d);
}

double tail_integral(const RadialFunction& f)
{
    const auto [c1, c2] = f.tail_coefficients();
    const double gamma = *f.tail_exponent;
    const int d = f.grid->d;
    const double R = f.grid->r_max;
    return tail_integral(d, R, c1, gamma) + tail_integral(d, R, c2, gamma + 2.0);
}

bool tail_negligible(const RadialFunction& f)
{
    const Eigen::Index n = f.values.size();
    const double scale = f.values.cwiseAbs().maxCoeff();
    return f.values.tail(std::min<Eigen::Index>(5, n)).cwiseAbs().maxCoeff() <= 1e-14 * scale;
}

std::optional<double> combine_sum(std::optional<double> a, std::optional<double> b)
{
    if (a && b)
        return std::min(*a, *b);
    return a ? a : b;
}

void check_same_grid(const RadialFunction& a, const RadialFunction& b)
{
    if (a.grid != b.grid)
        throw DomainError("radial functions live on different grids");
}

} // namespace

GridPtr build_grid(int d, double r_max, int n_inner, int n_outer)
{
    if (d != 3 && d != 4)
        throw ConfigError("grid dimension must be 3 or 4");
    if (n_inner < 16 || n_outer < 16 || n_inner % 2 || n_outer % 2)
        throw ConfigError("grid cell counts must be even and >= 16 (got " + std::to_string(n_inner) + ", " +
                          std::to_string(n_outer) + ")");
    if (!(r_max > 1))
        throw ConfigError("r_max must exceed 1");

    auto g = std::make_shared<RadialGrid>();
    g->d = d;
    g->r_max = r_max;
    g->n_inner = n_inner;
    g->n_outer = n_outer;
    const Eigen::Index n = n_inner + n_outer + 1;
    g->nodes.resize(n);
    const double h0 = 1.0 / n_inner;
    for (int i = 0; i <= n_inner; ++i)
        g->nodes(i) = i * h0;
    const double q = geometric_ratio(h0, n_outer, r_max - 1.0);
    g->growth = q;
    double r = 1.0, h = h0;
    for (int j = 1; j <= n_outer; ++j) {
        r += h;
        h *= q;
        g->nodes(n_inner + j) = r;
    }
    g->nodes(n - 1) = r_max;

    const auto& x = g->nodes;
    const double sigma = sphere_area(d);
    g->weights = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i + 2 < n; i += 2)
        add_simpson_pair(g->weights, x, i);
    for (Eigen::Index i = 0; i < n; ++i)
        g->weights(i) *= sigma * std::pow(x(i), d - 1);

    g->mass.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double left = i == 0 ? 0.0 : 0.5 * (x(i - 1) + x(i));
        const double right = i + 1 == n ? x(i) : 0.5 * (x(i) + x(i + 1));
        g->mass(i) = sigma / d * (std::pow(right, d) - std::pow(left, d));
    }

    g->flux.resize(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        g->flux(i) = sigma * std::pow(0.5 * (x(i) + x(i + 1)), d - 1) / (x(i + 1) - x(i));
    return g;
}

std::pair<double, double> RadialFunction::tail_coefficients() const
{
    if (!tail_exponent)
        return {0.0, 0.0};
    // f r^gamma = c1 + c2 r^{-2} over [R/2, R].
    const Eigen::VectorXd& r = grid->nodes;
    const double R = grid->r_max;
    double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
    for (Eigen::Index i = r.size() - 1; i >= 0 && r(i) >= 0.5 * R; --i) {
        const double y = values(i) * std::pow(r(i) / R, *tail_exponent);
        const double x = (R / r(i)) * (R / r(i));
        s00 += 1;
        s01 += x;
        s11 += x * x;
        b0 += y;
        b1 += x * y;
    }
    const double det = s00 * s11 - s01 * s01;
    const double a0 = (s11 * b0 - s01 * b1) / det;
    const double a1 = (s00 * b1 - s01 * b0) / det;
    const double unit = std::pow(R, *tail_exponent);
    return {a0 * unit, a1 * unit * R * R};
}

double RadialFunction::tail_amplitude() const
{
    const auto [c1, c2] = tail_coefficients();
    return c1;
}

bool RadialFunction::tail_consistent(double rel) const
{
    if (!tail_exponent)
        return true;
    const auto [c1, c2] = tail_coefficients();
    const Eigen::Index n = values.size();
    for (Eigen::Index i = n - 5; i < n; ++i) {
        const double r = grid->nodes(i);
        const double fit = std::pow(r, -*tail_exponent) * (c1 + c2 / (r * r));
        if (std::abs(fit - values(i)) > rel * std::abs(values(i)))
            return false;
    }
    return true;
}

RadialFunction sample_W(const ModelParams& m, const GridPtr& grid)
{
    return sample(grid, [&](double r) { return eval_W(m, r); }, m.d - 2.0);
}

RadialFunction sample_LambdaW(const ModelParams& m, const GridPtr& grid)
{
    return sample(grid, [&](double r) { return eval_LambdaW(m, r); }, m.d - 2.0);
}

RadialFunction sample_V(const ModelParams& m, const GridPtr& grid)
{
    return sample(grid, [&](double r) { return eval_V(m, r); }, 4.0);
}

RadialFunction operator+(const RadialFunction& a, const RadialFunction& b)
{
    check_same_grid(a, b);
    return {a.grid, a.values + b.values, combine_sum(a.tail_exponent, b.tail_exponent)};
}

RadialFunction operator-(const RadialFunction& a, const RadialFunction& b)
{
    check_same_grid(a, b);
    return {a.grid, a.values - b.values, combine_sum(a.tail_exponent, b.tail_exponent)};
}

RadialFunction operator*(double c, const RadialFunction& a) { return {a.grid, c * a.values, a.tail_exponent}; }

RadialFunction product(const RadialFunction& a, const RadialFunction& b)
{
    check_same_grid(a, b);
    std::optional<double> tail;
    if (a.tail_exponent && b.tail_exponent)
        tail = *a.tail_exponent + *b.tail_exponent;
    return {a.grid, a.values.cwiseProduct(b.values), tail};
}

RadialFunction signed_power(const RadialFunction& f, double r)
{
    Eigen::VectorXd v = f.values.unaryExpr([r](double x) { return std::copysign(std::pow(std::abs(x), r), x); });
    std::optional<double> tail;
    if (f.tail_exponent)
        tail = *f.tail_exponent * r;
    return {f.grid, std::move(v), tail};
}

Integral integrate_detailed(const RadialFunction& f)
{
    const RadialGrid& g = *f.grid;
    Integral out;
    out.value = g.weights.dot(f.values);
    if (f.tail_exponent) {
        const double gamma = *f.tail_exponent;
        if (gamma <= g.d) {
            if (!tail_negligible(f))
                throw DivergenceError("integrand tail r^-" + std::to_string(gamma) + " is not integrable in d = " +
                                      std::to_string(g.d));
        } else {
            out.tail = tail_integral(f);
            out.tail_included = true;
        }
    }
    out.value += out.tail;
    return out;
}

double integrate(const RadialFunction& f) { return integrate_detailed(f).value; }

double lq_norm(const RadialFunction& f, double q)
{
    if (!(q >= 1))
        throw DomainError("lq_norm requires q >= 1");
    RadialFunction a = signed_power(f, q);
    a.values = a.values.cwiseAbs();
    return std::pow(integrate(a), 1.0 / q);
}

double inner(const RadialFunction& f, const RadialFunction& g) { return integrate(product(f, g)); }

double mass_integral(const RadialFunction& f)
{
    const RadialGrid& g = *f.grid;
    double v = g.mass.dot(f.values);
    if (f.tail_exponent) {
        const double gamma = *f.tail_exponent;
        if (gamma <= g.d) {
            if (!tail_negligible(f))
                throw DivergenceError("integrand tail is not integrable");
        } else {
            v += tail_integral(f);
        }
    }
    return v;
}

double mass_lq_power(const RadialFunction& f, double r)
{
    RadialFunction a = signed_power(f, r);
    a.values = a.values.cwiseAbs();
    return mass_integral(a);
}

double gradient_norm_sq(const RadialFunction& f)
{
    const RadialGrid& g = *f.grid;
    const Eigen::Index n = f.values.size();
    const Eigen::VectorXd diff = f.values.tail(n - 1) - f.values.head(n - 1);
    double v = g.flux.dot(diff.cwiseAbs2());
    if (f.tail_exponent) {
        const double gamma = *f.tail_exponent;
        const double decay = 2.0 * gamma + 2.0;
        if (decay <= g.d)
            throw DivergenceError("gradient tail is not square integrable");
        const auto [c1, c2] = f.tail_coefficients();
        v += tail_integral(g.d, g.r_max, gamma * gamma * c1 * c1, decay) +
             tail_integral(g.d, g.r_max, 2.0 * gamma * (gamma + 2.0) * c1 * c2, decay + 2.0);
    }
    return v;
}

Eigen::VectorXd fd_weights(const Eigen::VectorXd& x, double x0, int order)
{
    // Fornberg's recursion.
    const Eigen::Index n = x.size();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, order + 1);
    double c1 = 1.0, c4 = x(0) - x0;
    c(0, 0) = 1.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        const int mn = static_cast<int>(std::min<Eigen::Index>(i, order));
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x(i) - x0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c3 = x(i) - x(j);
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k)
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c.col(order);
}

Eigen::VectorXd derivative(const RadialFunction& f)
{
    const Eigen::VectorXd& r = f.grid->nodes;
    const Eigen::Index n = r.size();
    Eigen::VectorXd out(n);
    out(0) = 0.0;
    Eigen::VectorXd x(5), y(5);
    for (Eigen::Index i = 1; i < n; ++i) {
        const Eigen::Index start = std::min<Eigen::Index>(i - 2, n - 5);
        for (int k = 0; k < 5; ++k) {
            const Eigen::Index j = start + k;
            // Even reflection through the origin.
            x(k) = j < 0 ? -r(-j) : r(j);
            y(k) = j < 0 ? f.values(-j) : f.values(j);
        }
        out(i) = fd_weights(x, r(i), 1).dot(y);
    }
    return out;
}

namespace {

struct MonotoneCubic {
    const RadialFunction& f;
    Eigen::VectorXd slope;

    explicit MonotoneCubic(const RadialFunction& fn) : f(fn), slope(derivative(fn))
    {
        const Eigen::VectorXd& r = f.grid->nodes;
        const Eigen::Index n = r.size();
        // Hyman filter.
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            const double left = (f.values(i) - f.values(i - 1)) / (r(i) - r(i - 1));
            const double right = (f.values(i + 1) - f.values(i)) / (r(i + 1) - r(i));
            if (left * right <= 0) {
                slope(i) = 0.0;
            } else {
                const double cap = 3.0 * std::min(std::abs(left), std::abs(right));
                if (slope(i) * left < 0)
                    slope(i) = 0.0;
                else if (std::abs(slope(i)) > cap)
                    slope(i) = std::copysign(cap, left);
            }
        }
    }

    double operator()(double rho) const
    {
        const Eigen::VectorXd& r = f.grid->nodes;
        const Eigen::Index n = r.size();
        const double R = r(n - 1);
        if (rho >= R) {
            const double gamma = f.tail_exponent ? *f.tail_exponent : f.grid->d - 2.0;
            return f.values(n - 1) * std::pow(R / rho, gamma);
        }
        const auto it = std::upper_bound(r.data(), r.data() + n, rho);
        const Eigen::Index i = std::max<Eigen::Index>(0, (it - r.data()) - 1);
        const double h = r(i + 1) - r(i);
        const double u = (rho - r(i)) / h;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
        return h00 * f.values(i) + h10 * h * slope(i) + h01 * f.values(i + 1) + h11 * h * slope(i + 1);
    }
};

} // namespace

double interpolate(const RadialFunction& f, double r) { return MonotoneCubic(f)(r); }

RadialFunction scale(const RadialFunction& f, double lambda)
{
    if (!(lambda > 0))
        throw DomainError("scale requires lambda > 0");
    if (lambda == 1.0)
        return f;
    const int d = f.grid->d;
    const MonotoneCubic interp(f);
    Eigen::VectorXd v(f.values.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = interp(dilation_radius(d, lambda, f.grid->nodes(i))) / lambda;
    return {f.grid, std::move(v), f.tail_exponent};
}

RadialFunction scale_exact(const RadialFunction& f, double lambda)
{
    if (!(lambda > 0))
        throw DomainError("scale requires lambda > 0");
    const RadialGrid& g = *f.grid;
    const int d = g.d;
    const double mu = std::pow(lambda, 2.0 / (d - 2));
    auto out = std::make_shared<RadialGrid>(g);
    out->r_max = mu * g.r_max;
    out->nodes *= mu;
    out->weights *= std::pow(mu, d);
    out->mass *= std::pow(mu, d);
    out->flux *= std::pow(mu, d - 2);
    return {out, f.values / lambda, f.tail_exponent};
}

double RadialOperator::boundary_weight() const
{
    return sphere_area(grid->d) * std::pow(grid->r_max, grid->d - 1);
}

Eigen::VectorXd RadialOperator::apply_weak(const Eigen::VectorXd& u) const
{
    const Eigen::Index n = diag.size();
    Eigen::VectorXd out = diag.cwiseProduct(u);
    out.head(n - 1) += upper.cwiseProduct(u.tail(n - 1));
    out.tail(n - 1) += lower.cwiseProduct(u.head(n - 1));
    return out;
}

Eigen::VectorXd RadialOperator::apply(const Eigen::VectorXd& u, double boundary_data) const
{
    Eigen::VectorXd out = apply_weak(u);
    out(out.size() - 1) -= boundary_weight() * boundary_data;
    return out.cwiseQuotient(grid->mass);
}

Eigen::VectorXd RadialOperator::rhs(const Eigen::VectorXd& f, double boundary_data) const
{
    Eigen::VectorXd out = grid->mass.cwiseProduct(f);
    out(out.size() - 1) += boundary_weight() * boundary_data;
    return out;
}

double far_field_kappa(const RadialGrid& grid, double s, FarField ff)
{
    const double R = grid.r_max;
    if (ff == FarField::automatic)
        ff = s > 0 ? FarField::yukawa : FarField::zero_energy;
    switch (ff) {
    case FarField::natural:
        return 0.0;
    case FarField::yukawa:
        return std::sqrt(s) + (grid.d - 1) / (2.0 * R);
    case FarField::zero_energy:
        return (grid.d - 2) / R;
    default:
        return 0.0;
    }
}

RadialOperator assemble_radial_operator(const GridPtr& grid, double s, const RadialFunction* potential, FarField ff)
{
    return assemble_radial_operator(grid, s, potential, far_field_kappa(*grid, s, ff));
}

RadialOperator assemble_radial_operator(const GridPtr& grid, double s, const RadialFunction* potential, double kappa)
{
    if (s < 0)
        throw DomainError("operator shift must be nonnegative");
    if (potential && potential->grid != grid)
        throw DomainError("potential lives on a different grid");
    const RadialGrid& g = *grid;
    const Eigen::Index n = g.size();
    RadialOperator op;
    op.grid = grid;
    op.s = s;
    op.kappa = kappa;
    op.lower = -g.flux;
    op.upper = -g.flux;
    op.diag = s * g.mass;
    if (potential)
        op.diag += g.mass.cwiseProduct(potential->values);
    op.diag.head(n - 1) += g.flux;
    op.diag.tail(n - 1) += g.flux;
    op.diag(n - 1) += op.boundary_weight() * kappa;
    op.conductance = g.flux;
    op.reaction = s * g.mass;
    if (potential)
        op.reaction += g.mass.cwiseProduct(potential->values);
    op.reaction(n - 1) += op.boundary_weight() * kappa;
    return op;
}

Eigen::VectorXd minus_laplacian_fd(const RadialFunction& f)
{
    const Eigen::VectorXd& r = f.grid->nodes;
    const Eigen::VectorXd& u = f.values;
    const int d = f.grid->d;
    const Eigen::Index n = r.size();
    Eigen::VectorXd out(n);
    out(0) = -d * 2.0 * (u(1) - u(0)) / (r(1) * r(1));
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double hm = r(i) - r(i - 1), hp = r(i + 1) - r(i);
        const double second = 2.0 * ((u(i + 1) - u(i)) / hp - (u(i) - u(i - 1)) / hm) / (hm + hp);
        const double first = (hm * hm * u(i + 1) - hp * hp * u(i - 1) + (hp * hp - hm * hm) * u(i)) /
                             (hm * hp * (hm + hp));
        out(i) = -second - (d - 1) / r(i) * first;
    }
    out(n - 1) = std::numeric_limits<double>::quiet_NaN();
    return out;
}

} // namespace cgs
