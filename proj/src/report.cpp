#include "cgs/report.hpp"
#include "cgs/errors.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

namespace cgs {

CheckRecord make_check(std::string name, double lhs, double rhs, double tolerance, double scale)
{
    CheckRecord c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.tolerance = tolerance;
    const double den = scale > 0 ? scale : std::max(std::abs(rhs), 1e-300);
    c.rel_error = std::abs(lhs - rhs) / den;
    c.pass = std::isfinite(c.rel_error) && c.rel_error <= tolerance;
    return c;
}

bool Report::all_pass() const { return first_failure() == nullptr; }

const CheckRecord* Report::first_failure() const
{
    for (const auto& c : checks)
        if (!c.skipped && !c.pass)
            return &c;
    return nullptr;
}

namespace {

nlohmann::ordered_json number(double x)
{
    if (std::isfinite(x))
        return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

std::string csv_cell(const nlohmann::ordered_json& v)
{
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos)
            return s;
        std::string q = "\"";
        for (char ch : s)
            q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }
    if (v.is_null())
        return "";
    return v.dump();
}

} // namespace

nlohmann::ordered_json to_json(const Report& r)
{
    nlohmann::ordered_json j;
    j["schema"] = report_schema;
    j["command"] = r.command;
    j["config"] = r.config;
    auto& checks = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : r.checks) {
        nlohmann::ordered_json x;
        x["name"] = c.name;
        x["lhs"] = number(c.lhs);
        x["rhs"] = number(c.rhs);
        x["rel_error"] = number(c.rel_error);
        x["tolerance"] = c.tolerance;
        x["pass"] = c.pass;
        x["skipped"] = c.skipped;
        if (!c.note.empty())
            x["note"] = c.note;
        checks.push_back(std::move(x));
    }
    j["records"] = r.records;
    j["summary"] = r.summary;
    j["pass"] = r.all_pass();
    return j;
}

std::string to_csv(const Report& r)
{
    std::ostringstream os;
    os << "schema," << report_schema << "\n";
    os << "command," << r.command << "\n";
    for (const auto& [k, v] : r.config.items())
        os << "config," << k << "," << csv_cell(v) << "\n";
    os << "\ncheck,lhs,rhs,rel_error,tolerance,pass,skipped\n";
    for (const auto& c : r.checks)
        os << csv_cell(c.name) << "," << csv_cell(number(c.lhs)) << "," << csv_cell(number(c.rhs)) << ","
           << csv_cell(number(c.rel_error)) << "," << csv_cell(c.tolerance) << "," << (c.pass ? "true" : "false")
           << "," << (c.skipped ? "true" : "false") << "\n";
    if (!r.records.empty()) {
        std::vector<std::string> cols;
        for (const auto& row : r.records)
            for (const auto& [k, v] : row.items())
                if (std::find(cols.begin(), cols.end(), k) == cols.end())
                    cols.push_back(k);
        os << "\n";
        for (size_t i = 0; i < cols.size(); ++i)
            os << (i ? "," : "") << cols[i];
        os << "\n";
        for (const auto& row : r.records) {
            for (size_t i = 0; i < cols.size(); ++i)
                os << (i ? "," : "") << (row.contains(cols[i]) ? csv_cell(row[cols[i]]) : "");
            os << "\n";
        }
    }
    if (!r.summary.empty()) {
        os << "\nsummary,value\n";
        for (const auto& [k, v] : r.summary.items())
            os << k << "," << csv_cell(v) << "\n";
    }
    os << "\npass," << (r.all_pass() ? "true" : "false") << "\n";
    return os.str();
}

double fourier_ball_quadrature(int d, double s, int panels)
{
    if (d != 3 && d != 4)
        throw DomainError("fourier_ball_quadrature: d must be 3 or 4");
    if (!(s > 0))
        throw DomainError("fourier_ball_quadrature requires s > 0");
    const int n = 2 * panels;
    const double h = 1.0 / n;
    auto f = [&](double rho) { return std::pow(rho, d - 3) / (rho * rho + s); };
    double sum = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i)
        sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return sphere_area(d) * sum * h / 3.0;
}

IdentityResiduals identity_residuals(const ModelParams& m, const GridPtr& grid)
{
    const ProfilesPtr pr = Profiles::make(m, grid);
    const Eigen::Index n = grid->size();
    // Interior nodes only; the last row carries the far-field closure.
    auto interior_max = [&](const Eigen::VectorXd& v) { return v.head(n - 1).cwiseAbs().maxCoeff(); };

    IdentityResiduals out;
    const RadialOperator lap = assemble_radial_operator(grid, 0.0, nullptr, FarField::zero_energy);
    const Eigen::VectorXd crit = pr->W.values.array().pow(m.critical_power()).matrix();
    out.laplacian_W = interior_max(lap.apply(pr->W.values) - crit) / crit.cwiseAbs().maxCoeff();

    const RadialOperator lin = assemble_radial_operator(grid, 0.0, &pr->V, FarField::zero_energy);
    out.linearized_LambdaW = interior_max(lin.apply(pr->LW.values)) / pr->psi.values.cwiseAbs().maxCoeff();

    const RadialFunction back = zero_energy_inverse(pr->psi);
    out.zero_energy_VLambdaW = (back.values + pr->LW.values).cwiseAbs().maxCoeff() / pr->LW.values.cwiseAbs().maxCoeff();
    return out;
}

std::vector<CheckRecord> identity_suite(const ModelParams& m, const GridSpec& spec, const IdentityTolerances& tol)
{
    std::vector<CheckRecord> out;
    for (double s : {0.25, 1.0, 4.0}) {
        char name[64];
        std::snprintf(name, sizeof name, "fourier_ball_integral(s=%g)", s);
        out.push_back(make_check(name, fourier_ball_quadrature(m.d, s), fourier_ball_integral(m.d, s), tol.fourier));
    }

    const GridPtr grid = make_grid(m.d, spec, 1.0);
    const IdentityResiduals res = identity_residuals(m, grid);
    out.push_back(make_check("laplacian_W_equals_W_critical", res.laplacian_W, 0.0, tol.residual, 1.0));
    out.push_back(make_check("linearized_operator_kills_LambdaW", res.linearized_LambdaW, 0.0, tol.residual, 1.0));
    out.push_back(make_check("zero_energy_inverse_VLambdaW", res.zero_energy_VLambdaW, 0.0, tol.residual, 1.0));

    if (tol.halving_ratio > 0) {
        GridSpec half = spec;
        half.n_inner *= 2;
        half.n_outer *= 2;
        const IdentityResiduals fine = identity_residuals(m, make_grid(m.d, half, 1.0));
        auto ratio_check = [&](const char* name, double coarse, double fine_res) {
            CheckRecord c;
            c.name = name;
            c.lhs = coarse / fine_res;
            c.rhs = 4.0;
            c.tolerance = tol.halving_ratio;
            c.rel_error = std::abs(c.lhs - c.rhs) / c.rhs;
            c.pass = std::isfinite(c.lhs) && c.lhs >= tol.halving_ratio;
            c.note = "residual reduction under mesh halving";
            out.push_back(std::move(c));
        };
        ratio_check("laplacian_W_halving_ratio", res.laplacian_W, fine.laplacian_W);
        ratio_check("linearized_LambdaW_halving_ratio", res.linearized_LambdaW, fine.linearized_LambdaW);
        ratio_check("zero_energy_inverse_halving_ratio", res.zero_energy_VLambdaW, fine.zero_energy_VLambdaW);
    }

    // Integral identities with slowly decaying integrands need the far tail, not finer cells.
    const GridPtr qgrid = build_grid(m.d, tol.quadrature_rmax, spec.n_inner, spec.n_outer);
    const ProfilesPtr pr = Profiles::make(m, qgrid);
    const double conj = m.two_star / (m.two_star - 1.0);
    const double ortho_scale = lq_norm(pr->W, m.two_star) * lq_norm(pr->psi, conj);
    out.push_back(make_check("W_orthogonal_to_VLambdaW", inner(pr->W, pr->psi), 0.0, tol.quadrature, ortho_scale));

    std::vector<double> powers;
    for (double r : {2.0, m.p, m.critical_power()})
        if (std::find(powers.begin(), powers.end(), r) == powers.end())
            powers.push_back(r);
    for (double r : powers) {
        char name[64];
        std::snprintf(name, sizeof name, "W^%g_LambdaW_pairing", r);
        double closed;
        try {
            closed = w_power_lambda_pairing(m, r);
        } catch (const DivergenceError&) {
            CheckRecord c;
            c.name = name;
            c.skipped = true;
            c.pass = true;
            c.tolerance = tol.quadrature;
            c.lhs = c.rhs = c.rel_error = std::numeric_limits<double>::quiet_NaN();
            c.note = "not integrable: W^(r+1) is not in L^1";
            out.push_back(std::move(c));
            continue;
        }
        const RadialFunction wr = signed_power(pr->W, r);
        const double quad = inner(wr, pr->LW);
        RadialFunction absprod = product(wr, pr->LW);
        absprod.values = absprod.values.cwiseAbs();
        const double scale = std::max(std::abs(closed), integrate(absprod));
        out.push_back(make_check(name, quad, closed, tol.quadrature, scale));
    }
    return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("fit_slope needs two or more matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - sx / n) * (x[i] - sx / n);
        sxy += (x[i] - sx / n) * (y[i] - sy / n);
    }
    return sxy / sxx;
}

ResolventProbe probe_resolvent(const ModelParams& m, const GridSpec& spec, const std::vector<double>& shifts,
                               double q, unsigned long long seed, int bumps)
{
    if (shifts.size() < 2)
        throw DomainError("probe_resolvent needs at least two shifts");
    const double s_min = *std::min_element(shifts.begin(), shifts.end());
    const GridPtr grid = make_grid(m.d, spec, s_min);
    const ProfilesPtr pr = Profiles::make(m, grid);
    const Eigen::ArrayXd r = grid->nodes.array();
    const RadialFunction bump(grid, (-r.square()).exp().matrix());

    ResolventProbe out;
    out.q = q;
    std::vector<double> ls, lg, lw, ll, lc;
    for (double s : shifts) {
        const PerturbedInverse P(pr, s);
        ResolventProbeRow row;
        row.s = s;
        row.amp_generic = lq_norm(P.apply(bump), q) / lq_norm(bump, q);
        row.amp_W = lq_norm(P.apply(pr->W), q) / lq_norm(pr->W, q);
        row.law = delta(m, s) / s;
        row.X = delta(m, s) * inner(FreeResolvent(grid, s).apply(pr->W), pr->psi);
        out.rows.push_back(row);
        ls.push_back(std::log(s));
        lg.push_back(std::log(row.amp_generic));
        lw.push_back(std::log(row.amp_W));
        ll.push_back(std::log(row.law));
        lc.push_back(std::log(row.law / row.X));
    }
    out.slope_generic = fit_slope(ls, lg);
    out.slope_W = fit_slope(ls, lw);
    out.slope_law = fit_slope(ls, ll);
    out.slope_corrected = fit_slope(ls, lc);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    out.bumps = bumps;
    for (int k = 0; k < bumps; ++k) {
        const double height = 0.5 + unit(rng), centre = 3.0 * unit(rng), width = 0.5 + 2.0 * unit(rng);
        const RadialFunction f(grid, (height * (-(r - centre).square() / (width * width)).exp()).matrix());
        const RadialFunction direct = perturbed_inverse_direct(pr, 1e-3, f);
        const RadialFunction block = perturbed_inverse_block(pr, 1e-3, f).g;
        const RadialFunction diff(grid, direct.values - block.values);
        out.block_direct_max = std::max(out.block_direct_max, lq_norm(diff, q) / lq_norm(direct, q));
    }
    return out;
}

} // namespace cgs
