#pragma once

#include "cgs/closed_forms.hpp"
#include "cgs/radial.hpp"

namespace cgs {

enum class ShotClass { decayed, crossed_zero, blew_up };

const char* to_string(ShotClass c);

struct ShootingResult {
    double u0 = 0;
    RadialFunction profile;  // sampled on the supplied grid; no tail
    ShotClass classified = ShotClass::decayed;
    double event_radius = 0;  // where the branch terminated (inf when it never did)
    double bisection_width = 0;
    int shots = 0;
};

struct ShootingOptions {
    double rtol = 1e-12;
    double atol = 1e-20;
    double scan_low = 0.5;   // bracket scan, relative to the expected height
    double scan_high = 2.0;
    int scan_points = 13;
    double width_tol = 1e-12;
};

// Integrates u'' + (d-1)/r u' = s u - t u^p - u^{2*-1} from a series start at the origin,
// sampling at the grid nodes. Classification window is r <= 8/sqrt(s).
ShootingResult shoot(const ModelParams& m, double s, double t, double u0, const GridPtr& grid,
                     const ShootingOptions& opt = {});
ShootingResult shoot(const ModelParams& m, double s, double t, double u0);

// Bisection on u(0) between the undershoot and overshoot branches.
ShootingResult find_ground_state_shooting(const ModelParams& m, double s, double t, const GridPtr& grid,
                                          double expected_height = 1.0, const ShootingOptions& opt = {});

struct ProfileComparison {
    double linf_rel = 0;
    double lq_rel = 0;
};

// Differences relative to the first argument.
ProfileComparison compare_profiles(const RadialFunction& u1, const RadialFunction& u2, double q = 2.0);

} // namespace cgs
