#pragma once

#include "cgs/closed_forms.hpp"

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <utility>

namespace cgs {

struct RadialGrid {
    int d = 3;
    double r_max = 0;
    int n_inner = 0;
    int n_outer = 0;
    double growth = 1;        // ratio of consecutive cell widths on [1, r_max]
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;  // composite Simpson in r times sigma_d r^{d-1}
    Eigen::VectorXd mass;     // control-volume measure, used by the discrete operator
    Eigen::VectorXd flux;     // stiffness coefficient between nodes i and i+1

    Eigen::Index size() const { return nodes.size(); }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// Uniform on [0,1], geometrically graded on [1, r_max] with the first outer
// cell as wide as the inner ones.  Both counts even and >= 16.
GridPtr build_grid(int d, double r_max, int n_inner, int n_outer);

struct RadialFunction {
    GridPtr grid;
    Eigen::VectorXd values;
    std::optional<double> tail_exponent;  // f(r) ~ c r^{-gamma} beyond r_max

    RadialFunction() = default;
    RadialFunction(GridPtr g, Eigen::VectorXd v, std::optional<double> tail = std::nullopt)
        : grid(std::move(g)), values(std::move(v)), tail_exponent(tail) {}

    // f ~ c1 r^{-gamma} + c2 r^{-gamma-2}, least squares over [R/2, R]; zeros without a tail exponent.
    std::pair<double, double> tail_coefficients() const;
    double tail_amplitude() const;
    // The fitted tail reproduces the last five values to within rel.
    bool tail_consistent(double rel = 0.05) const;
    RadialFunction with_values(Eigen::VectorXd v) const { return {grid, std::move(v), tail_exponent}; }
};

template <typename F>
RadialFunction sample(const GridPtr& grid, F&& f, std::optional<double> tail = std::nullopt)
{
    Eigen::VectorXd v(grid->size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = f(grid->nodes(i));
    return {grid, std::move(v), tail};
}

RadialFunction sample_W(const ModelParams& m, const GridPtr& grid);
RadialFunction sample_LambdaW(const ModelParams& m, const GridPtr& grid);
RadialFunction sample_V(const ModelParams& m, const GridPtr& grid);

RadialFunction operator+(const RadialFunction& a, const RadialFunction& b);
RadialFunction operator-(const RadialFunction& a, const RadialFunction& b);
RadialFunction operator*(double c, const RadialFunction& a);
RadialFunction product(const RadialFunction& a, const RadialFunction& b);
// sign(f)|f|^r, tail exponent multiplied by r.
RadialFunction signed_power(const RadialFunction& f, double r);

struct Integral {
    double value = 0;
    double tail = 0;
    bool tail_included = false;
};

Integral integrate_detailed(const RadialFunction& f);
double integrate(const RadialFunction& f);
double lq_norm(const RadialFunction& f, double q);
double inner(const RadialFunction& f, const RadialFunction& g);

// Mass-lumped forms matching the discrete operator.
double mass_integral(const RadialFunction& f);
double mass_lq_power(const RadialFunction& f, double r);
double gradient_norm_sq(const RadialFunction& f);

// T_lambda[f] resampled on f's grid by monotone cubic interpolation.
RadialFunction scale(const RadialFunction& f, double lambda);
// T_lambda[f] on the dilated grid (nodes multiplied by lambda^{2/(d-2)}); no interpolation.
RadialFunction scale_exact(const RadialFunction& f, double lambda);
// Evaluate f at an arbitrary radius with the same interpolant and far-field rule as scale().
double interpolate(const RadialFunction& f, double r);

// Finite-difference weights for derivative `order` at x0 from the given stencil.
Eigen::VectorXd fd_weights(const Eigen::VectorXd& x, double x0, int order);
// Pointwise first derivative from five-point stencils.
Eigen::VectorXd derivative(const RadialFunction& f);

enum class FarField { automatic, natural, yukawa, zero_energy };

// Symmetric weak form K of -Delta + s + V with K u = M f + b_N e_N for the
// Robin closure u'(R) = -kappa u(R) + data.
struct RadialOperator {
    GridPtr grid;
    double s = 0;
    double kappa = 0;
    Eigen::VectorXd lower, diag, upper;
    Eigen::VectorXd conductance;  // -upper, kept exact for the flux-form solver
    Eigen::VectorXd reaction;     // diag minus the conductances

    double boundary_weight() const;  // sigma_d R^{d-1}
    Eigen::VectorXd apply_weak(const Eigen::VectorXd& u) const;
    // M^{-1} K u minus the boundary data contribution.
    Eigen::VectorXd apply(const Eigen::VectorXd& u, double boundary_data = 0) const;
    Eigen::VectorXd rhs(const Eigen::VectorXd& f, double boundary_data = 0) const;
};

double far_field_kappa(const RadialGrid& grid, double s, FarField ff);
RadialOperator assemble_radial_operator(const GridPtr& grid, double s, const RadialFunction* potential = nullptr,
                                        FarField ff = FarField::automatic);
RadialOperator assemble_radial_operator(const GridPtr& grid, double s, const RadialFunction* potential,
                                        double kappa);

// Independent nonuniform three-point evaluation of -f'' - (d-1)/r f' at interior
// nodes 1..n-2; the origin uses -d f''(0) from the even extension.
Eigen::VectorXd minus_laplacian_fd(const RadialFunction& f);

} // namespace cgs
