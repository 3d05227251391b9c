#pragma once

#include "cgs/closed_forms.hpp"
#include "cgs/resolvent.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace cgs {

inline constexpr const char* report_schema = "cgs-report/1";

struct CheckRecord {
    std::string name;
    double lhs = 0;
    double rhs = 0;
    double rel_error = 0;
    double tolerance = 0;
    bool pass = false;
    bool skipped = false;  // identity not defined for these parameters
    std::string note;
};

// rel_error = |lhs - rhs| / scale, scale defaulting to max(|rhs|, tiny).
CheckRecord make_check(std::string name, double lhs, double rhs, double tolerance, double scale = 0);

struct Report {
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<CheckRecord> checks;
    std::vector<nlohmann::ordered_json> records;  // flat rows
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();

    bool all_pass() const;
    const CheckRecord* first_failure() const;
};

nlohmann::ordered_json to_json(const Report& r);
std::string to_csv(const Report& r);

struct IdentityTolerances {
    double residual = 1e-5;     // O(h^2) residual identities, relative
    double quadrature = 1e-8;   // integral identities
    double fourier = 1e-6;
    double halving_ratio = 3.95;  // minimum residual reduction when h halves; 0 skips the refined grid
    double quadrature_rmax = 1000.0;
};

// Simpson quadrature on [0, 1] of sigma_d rho^{d-3} / (rho^2 + s).
double fourier_ball_quadrature(int d, double s, int panels = 512);

// The closed-form identity suite of the verify command.
std::vector<CheckRecord> identity_suite(const ModelParams& m, const GridSpec& spec,
                                        const IdentityTolerances& tol = {});

// Relative residuals of the structural identities on one grid (used for order checks).
struct IdentityResiduals {
    double laplacian_W = 0;
    double linearized_LambdaW = 0;
    double zero_energy_VLambdaW = 0;
};
IdentityResiduals identity_residuals(const ModelParams& m, const GridPtr& grid);

struct ResolventProbeRow {
    double s = 0;
    double amp_generic = 0;  // ||g||_q / ||f||_q for the Gaussian bump
    double amp_W = 0;        // same for f = W
    double law = 0;          // delta(s) / s
    double X = 0;            // delta(s) <(-Delta+s)^{-1} W, V LambdaW>
};

struct ResolventProbe {
    double q = 0;
    std::vector<ResolventProbeRow> rows;
    double slope_generic = 0;  // least squares in log-log
    double slope_W = 0;
    double slope_law = 0;
    double slope_corrected = 0;   // of delta(s) / (s X(s))
    double block_direct_max = 0;  // worst relative L^q gap over the random bumps
    int bumps = 0;
};

// Amplification of {1 + (-Delta+s)^{-1} V}^{-1} over the given shifts, plus the block/direct
// comparison at s = 1e-3 on seeded random bumps.
ResolventProbe probe_resolvent(const ModelParams& m, const GridSpec& spec, const std::vector<double>& shifts,
                               double q, unsigned long long seed = 1, int bumps = 10);

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace cgs
