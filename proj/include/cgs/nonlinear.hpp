#pragma once

#include "cgs/radial.hpp"

namespace cgs {

// |x|^{r-1} x, also for negative x.
inline double signed_pow(double x, double r) { return std::copysign(std::pow(std::abs(x), r), x); }

RadialFunction eval_N(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta, double t);
RadialFunction eval_F(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta, double s, double t);
RadialFunction eval_D(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta1,
                      const RadialFunction& eta2);
RadialFunction eval_E(const ModelParams& m, const RadialFunction& W, const RadialFunction& eta1,
                      const RadialFunction& eta2);

// Convenience overloads sampling W on eta's grid.
RadialFunction eval_N(const ModelParams& m, const RadialFunction& eta, double t);
RadialFunction eval_F(const ModelParams& m, const RadialFunction& eta, double s, double t);

// Original: omega ||u||^2 + ||grad u||^2 - ||u||_{p+1}^{p+1} - ||u||_{2*}^{2*}.
// Rescaled: the same with (omega, 1) replaced by (alpha, t) on the subcritical term.
struct FunctionalMode {
    double shift = 0;     // omega or alpha
    double coupling = 1;  // 1 in the original equation, t after rescaling

    static FunctionalMode original(double omega) { return {omega, 1.0}; }
    static FunctionalMode rescaled(double alpha, double t) { return {alpha, t}; }
};

// Pieces of the discrete energy.  Without a power tail the exterior of the
// grid is closed with the Yukawa Robin term, which is the exact exterior
// energy of the decaying continuation.
struct EnergyParts {
    double grad_sq = 0;   // ||grad u||^2 (with exterior)
    double mass_sq = 0;   // ||u||^2, left at 0 when the shift is 0
    double sub = 0;       // ||u||_{p+1}^{p+1}
    double crit = 0;      // ||u||_{2*}^{2*}
};

EnergyParts energy_parts(const ModelParams& m, const RadialFunction& u, double shift);

double nehari(const ModelParams& m, const RadialFunction& u, const FunctionalMode& mode);
double action(const ModelParams& m, const RadialFunction& u, const FunctionalMode& mode);

// ((1/d) alpha ||u||^2 - (2*-(p+1))/(2*(p+1)) t ||u||_{p+1}^{p+1}) / (larger term); 0 for u = 0.
double pohozaev_residual(const ModelParams& m, const RadialFunction& u, double alpha, double t);

// max over interior nodes of |-Delta u + shift u - coupling u^p - u^{2*-1}|, from the
// independent three-point stencil.
double pde_residual(const ModelParams& m, const RadialFunction& u, double shift, double coupling);

struct KpValue {
    double closed_form = 0;
    double quadrature = 0;
};

// Returns both routes; throws QuadratureError if they differ by more than 1e-7.
KpValue compute_Kp_detailed(const ModelParams& m);
double compute_Kp(const ModelParams& m);

} // namespace cgs
