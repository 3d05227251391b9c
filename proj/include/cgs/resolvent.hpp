#pragma once

#include "cgs/radial.hpp"
#include "cgs/tridiagonal.hpp"

#include <memory>
#include <vector>

namespace cgs {

// Sampled W, LambdaW, V and psi = V LambdaW on one grid, with the pairings the
// projections need.
struct Profiles {
    ModelParams params;
    GridPtr grid;
    RadialFunction W, LW, V, psi;
    double lw_psi = 0;   // <LambdaW, psi>
    double psi_psi = 0;  // ||psi||^2

    static std::shared_ptr<const Profiles> make(const ModelParams& m, const GridPtr& grid);
};

using ProfilesPtr = std::shared_ptr<const Profiles>;

RadialFunction project_Q(const Profiles& pr, const RadialFunction& f);
RadialFunction project_Pi(const Profiles& pr, const RadialFunction& f);

// (-Delta + s)^{-1} with the Yukawa Robin closure, factorized once.
class FreeResolvent {
public:
    FreeResolvent(GridPtr grid, double s);

    // Closure imposed on u - f/s so the particular solution f/s is not cut off.
    RadialFunction apply(const RadialFunction& f) const;
    // Homogeneous Robin closure; right for rapidly decaying data.
    RadialFunction apply_homogeneous(const RadialFunction& f) const;

    double shift() const { return op_.s; }
    const RadialOperator& op() const { return op_; }

private:
    RadialFunction solve(const RadialFunction& f, double boundary_data) const;
    RadialOperator op_;
    FluxFormLU<double> lu_;
};

RadialFunction free_resolvent(double s, const RadialFunction& f);

// (-Delta)^{-1} with u ~ r^{-(min(d, gamma) - 2)} closure.
RadialFunction zero_energy_inverse(const RadialFunction& f);

// {1 + (-Delta+s)^{-1} V}^{-1} by the bordered direct solve.
class PerturbedInverse {
public:
    PerturbedInverse(ProfilesPtr profiles, double s);
    RadialFunction apply(const RadialFunction& f) const;
    double shift() const { return s_; }

private:
    ProfilesPtr pr_;
    double s_;
    struct Factor;
    std::shared_ptr<Factor> factor_;
};

RadialFunction perturbed_inverse_direct(const ProfilesPtr& profiles, double s, const RadialFunction& f);

struct BlockOptions {
    double eps = 0.05;
    double term_tol = 1e-12;
    int max_terms = 200;
    int max_halvings = 8;
};

struct BlockResult {
    RadialFunction g;
    double eps_used = 0;
    int outer_terms = 0;        // Neumann terms for the 2x2 coupling
    int inner_terms = 0;        // Neumann terms for A11, summed over calls
    double coupling_ratio = 0;  // largest observed term ratio in the 2x2 series
};

// Q/Pi block scheme: B_eps A_eps(s)^{-1} C f.
BlockResult perturbed_inverse_block(const ProfilesPtr& profiles, double s, const RadialFunction& f,
                                    const BlockOptions& opt = {});

struct EigenPair {
    double e0 = 0;
    double e1 = 0;
    int negative_count = 0;
    double residual = 0;
    RadialFunction phi;
};

// Radial -Delta + V with the zero-energy closure.
EigenPair lowest_eigenpair(const ProfilesPtr& profiles);
double rayleigh_quotient(const ProfilesPtr& profiles, const RadialFunction& f);

double script_X(const ProfilesPtr& profiles, double tau);
double script_Wp(const ProfilesPtr& profiles, double tau);

struct A1Estimate {
    double value = 0;
    int degree = 0;  // polynomial degree in delta(s) used for the extrapolation
    std::vector<double> shifts;
    std::vector<double> samples;  // delta(s) <R_s W, psi>
    double closed_form = 0;
    double closed_form_rel_diff = 0;
};

struct GridSpec {
    int n_inner = 512;
    int n_outer = 2048;
    double r_max = 0;  // 0: max(100, 8/sqrt(s_min))
};

double default_rmax(double s_min);
GridPtr make_grid(int d, const GridSpec& spec, double s_min);

A1Estimate compute_A1(const ModelParams& m, const GridSpec& spec = {});

} // namespace cgs
