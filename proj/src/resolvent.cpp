#include "cgs/resolvent.hpp"
#include "cgs/errors.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

namespace cgs {

namespace {

using SparseSolver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// [[K, col], [row^T, corner]] as a sparse matrix.
Eigen::SparseMatrix<double> bordered(const RadialOperator& op, const Eigen::VectorXd& col, const Eigen::VectorXd& row,
                                     double corner)
{
    const Eigen::Index n = op.diag.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(i, i, op.diag(i));
        if (i + 1 < n) {
            trip.emplace_back(i, i + 1, op.upper(i));
            trip.emplace_back(i + 1, i, op.lower(i));
        }
        if (col(i) != 0)
            trip.emplace_back(i, n, col(i));
        if (row(i) != 0)
            trip.emplace_back(n, i, row(i));
    }
    trip.emplace_back(n, n, corner);
    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

void factorize_or_throw(SparseSolver& lu, const Eigen::SparseMatrix<double>& A, double s, const char* what)
{
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success)
        throw ConditioningError(std::string(what) + ": singular bordered system", s);
}

Eigen::VectorXd solve_checked(const SparseSolver& lu, const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                              double s, const char* what)
{
    Eigen::VectorXd x = lu.solve(b);
    if (!all_finite(x))
        throw ConditioningError(std::string(what) + ": non-finite solution", s);
    const double scale = sup_norm(b);
    if (scale > 0) {
        const double res = sup_norm(A * x - b);
        if (!(res <= 1e-6 * scale))
            throw ConditioningError(std::string(what) + ": bordered solve residual " + std::to_string(res / scale), s);
    }
    return x;
}

} // namespace

std::shared_ptr<const Profiles> Profiles::make(const ModelParams& m, const GridPtr& grid)
{
    if (grid->d != m.d)
        throw DomainError("grid and model dimensions differ");
    auto pr = std::make_shared<Profiles>();
    pr->params = m;
    pr->grid = grid;
    pr->W = sample_W(m, grid);
    pr->LW = sample_LambdaW(m, grid);
    pr->V = sample_V(m, grid);
    pr->psi = product(pr->V, pr->LW);
    pr->lw_psi = inner(pr->LW, pr->psi);
    pr->psi_psi = inner(pr->psi, pr->psi);
    return pr;
}

RadialFunction project_Q(const Profiles& pr, const RadialFunction& f)
{
    return (inner(f, pr.psi) / pr.lw_psi) * pr.LW;
}

RadialFunction project_Pi(const Profiles& pr, const RadialFunction& f)
{
    return (inner(f, pr.psi) / pr.psi_psi) * pr.psi;
}

FreeResolvent::FreeResolvent(GridPtr grid, double s)
{
    if (!(s > 0))
        throw DomainError("free resolvent requires s > 0");
    op_ = assemble_radial_operator(grid, s, nullptr, FarField::yukawa);
    lu_.factor(op_.conductance, op_.reaction);
}

RadialFunction FreeResolvent::solve(const RadialFunction& f, double boundary_data) const
{
    if (f.grid != op_.grid)
        throw DomainError("resolvent applied on a different grid");
    Eigen::VectorXd u = lu_.solve(op_.rhs(f.values, boundary_data));
    if (!all_finite(u))
        throw ConditioningError("free resolvent: non-finite solution", op_.s);
    return {op_.grid, std::move(u), f.tail_exponent};
}

RadialFunction FreeResolvent::apply(const RadialFunction& f) const
{
    const Eigen::Index n = f.values.size();
    const double slope = derivative(f)(n - 1);
    const double data = (slope + op_.kappa * f.values(n - 1)) / op_.s;
    return solve(f, data);
}

RadialFunction FreeResolvent::apply_homogeneous(const RadialFunction& f) const { return solve(f, 0.0); }

RadialFunction free_resolvent(double s, const RadialFunction& f) { return FreeResolvent(f.grid, s).apply(f); }

RadialFunction zero_energy_inverse(const RadialFunction& f)
{
    const RadialGrid& g = *f.grid;
    double decay = g.d - 2.0;
    double data = 0.0;
    if (f.tail_exponent) {
        const double gamma = *f.tail_exponent;
        if (gamma <= 2.0 && f.values.cwiseAbs().maxCoeff() > 0)
            throw DivergenceError("zero-energy inverse needs data decaying faster than r^-2");
        // Exterior particular solution c r^{2-gamma} / ((gamma-2)(d-gamma)) for each fitted
        // tail term; the harmonic remainder takes the r^{2-d} closure.
        if (std::abs(gamma - g.d) > 1e-12) {
            const auto [c1, c2] = f.tail_coefficients();
            const double R = g.r_max;
            data = c1 * std::pow(R, 1.0 - gamma) / (gamma - 2.0);
            if (std::abs(gamma + 2.0 - g.d) > 1e-12)
                data += c2 * std::pow(R, -1.0 - gamma) / gamma;
        }
        decay = std::min<double>(g.d, gamma) - 2.0;
    }
    const RadialOperator op = assemble_radial_operator(f.grid, 0.0, nullptr, FarField::zero_energy);
    const FluxFormLU<double> lu(op.conductance, op.reaction);
    Eigen::VectorXd u = lu.solve(op.rhs(f.values, data));
    return {f.grid, std::move(u), decay};
}

struct PerturbedInverse::Factor {
    RadialOperator op;
    FluxFormLU<double> lu;
};

PerturbedInverse::PerturbedInverse(ProfilesPtr profiles, double s) : pr_(std::move(profiles)), s_(s)
{
    if (!(s > 0))
        throw DomainError("perturbed inverse requires s > 0");
    factor_ = std::make_shared<Factor>();
    factor_->op = assemble_radial_operator(pr_->grid, s, &pr_->V, FarField::yukawa);
    factor_->lu.factor(factor_->op.conductance, factor_->op.reaction);
    if (!(factor_->lu.min_pivot_ratio() > 1e-14))
        throw ConditioningError("perturbed inverse: singular factorization", s);
}

RadialFunction PerturbedInverse::apply(const RadialFunction& f) const
{
    const Profiles& pr = *pr_;
    if (f.grid != pr.grid)
        throw DomainError("perturbed inverse applied on a different grid");
    // g = f + h with (-Delta + s + V) h = -V f.
    const Eigen::VectorXd b = -pr.grid->mass.cwiseProduct(pr.V.values.cwiseProduct(f.values));
    const Eigen::VectorXd h = factor_->lu.solve(b);
    if (!all_finite(h))
        throw ConditioningError("perturbed inverse: non-finite solution", s_);
    const Eigen::VectorXd r = factor_->op.apply_weak(h) - b;
    if (!(r.cwiseAbs().maxCoeff() <= 1e-6 * std::max(b.cwiseAbs().maxCoeff(), 1e-300)))
        throw ConditioningError("perturbed inverse: residual check failed", s_);
    return {pr.grid, f.values + h, f.tail_exponent};
}

RadialFunction perturbed_inverse_direct(const ProfilesPtr& profiles, double s, const RadialFunction& f)
{
    return PerturbedInverse(profiles, s).apply(f);
}

namespace {

class BlockScheme {
public:
    BlockScheme(ProfilesPtr pr, double s) : pr_(std::move(pr)), s_(s), Rs_(pr_->grid, s)
    {
        const Profiles& p = *pr_;
        const int d = p.params.d;
        op0_ = assemble_radial_operator(p.grid, 0.0, nullptr, (d - 2.0) / p.grid->r_max);
        lu0_.factor(op0_.conductance, op0_.reaction);

        // (1-Q)(1 + R_0 V) restricted to X, bordered by the constraint <g, psi> = 0.
        const RadialOperator opV = assemble_radial_operator(p.grid, 0.0, &p.V, (d - 2.0) / p.grid->r_max);
        const Eigen::VectorXd col = p.grid->mass.cwiseProduct(p.psi.values);
        const Eigen::VectorXd row = p.psi.values.cwiseProduct(p.grid->weights);
        K1_ = bordered(opV, col, row, p.lw_psi);
        factorize_or_throw(K1lu_, K1_, 0.0, "zero-energy block");

        const RadialFunction Lphi = apply_L(p.LW);
        a22_ = inner(Lphi, p.psi) / p.psi_psi;
        if (!(std::abs(a22_) > 0))
            throw ConditioningError("rank-one block degenerate", s);
    }

    RadialFunction R0(const RadialFunction& f) const
    {
        return {pr_->grid, lu0_.solve(op0_.rhs(f.values)), std::nullopt};
    }

    RadialFunction apply_L(const RadialFunction& x) const
    {
        return x + Rs_.apply_homogeneous(product(pr_->V, x));
    }

    RadialFunction one_minus_Q(const RadialFunction& f) const { return f - project_Q(*pr_, f); }

    // Inverse of (1-Q)(1 + R_0 V) on X.
    RadialFunction K1(const RadialFunction& f) const
    {
        const Profiles& p = *pr_;
        const Eigen::Index n = f.values.size();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
        b.head(n) = -p.grid->mass.cwiseProduct(p.V.values.cwiseProduct(f.values));
        const Eigen::VectorXd x = solve_checked(K1lu_, K1_, b, 0.0, "zero-energy block");
        Eigen::VectorXd g = f.values + x.head(n) + x(n) * p.LW.values;
        return {p.grid, std::move(g), f.tail_exponent};
    }

    RadialFunction S11(const RadialFunction& x) const
    {
        const RadialFunction Vx = product(pr_->V, x);
        return one_minus_Q(Rs_.apply_homogeneous(Vx) - R0(Vx));
    }

    // Inverse of (1-Q)(1 + R_s V) on X, as a Neumann series around K1.
    RadialFunction A11_inverse_unscaled(const RadialFunction& f, const BlockOptions& opt, int& terms) const
    {
        RadialFunction term = K1(f);
        RadialFunction sum = term;
        double prev = sup_norm(term.values);
        int growing = 0;
        for (int k = 1; k < opt.max_terms; ++k) {
            term = -1.0 * K1(S11(term));
            ++terms;
            sum = sum + term;
            const double size = sup_norm(term.values);
            if (size <= opt.term_tol * sup_norm(sum.values))
                return sum;
            growing = size >= prev ? growing + 1 : 0;
            if (growing >= 3)
                throw DivergenceError("A11 Neumann series does not contract: s too large");
            prev = size;
        }
        throw DivergenceError("A11 Neumann series did not converge within the term limit");
    }

    RadialFunction A22_inverse(const RadialFunction& y) const
    {
        return (inner(y, pr_->psi) / pr_->psi_psi / a22_) * pr_->LW;
    }

    const Profiles& profiles() const { return *pr_; }

private:
    ProfilesPtr pr_;
    double s_;
    FreeResolvent Rs_;
    RadialOperator op0_;
    FluxFormLU<double> lu0_;
    Eigen::SparseMatrix<double> K1_;
    SparseSolver K1lu_;
    double a22_ = 0;
};

BlockResult block_solve(const BlockScheme& B, const RadialFunction& f, double eps, const BlockOptions& opt)
{
    BlockResult out;
    out.eps_used = eps;
    const Profiles& p = B.profiles();
    const RadialFunction f1 = B.one_minus_Q(f);
    const RadialFunction f2 = project_Pi(p, f);

    auto A11inv = [&](const RadialFunction& y) { return (1.0 / eps) * B.A11_inverse_unscaled(y, opt, out.inner_terms); };
    // T = [[0, A11^{-1} A12], [A22^{-1} A21, 0]]
    auto apply_T = [&](const RadialFunction& x1, const RadialFunction& x2) {
        RadialFunction y1 = A11inv(B.one_minus_Q(B.apply_L(x2)));
        RadialFunction y2 = B.A22_inverse(eps * project_Pi(p, B.apply_L(x1)));
        return std::make_pair(std::move(y1), std::move(y2));
    };

    RadialFunction t1 = A11inv(f1), t2 = B.A22_inverse(f2);
    RadialFunction s1 = t1, s2 = t2;
    double prev = std::max(sup_norm(t1.values), sup_norm(t2.values));
    int growing = 0;
    for (int k = 1; k < opt.max_terms; ++k) {
        auto [y1, y2] = apply_T(t1, t2);
        t1 = -1.0 * y1;
        t2 = -1.0 * y2;
        s1 = s1 + t1;
        s2 = s2 + t2;
        ++out.outer_terms;
        const double size = std::max(sup_norm(t1.values), sup_norm(t2.values));
        if (prev > 0)
            out.coupling_ratio = std::max(out.coupling_ratio, size / prev);
        if (size <= opt.term_tol * std::max(sup_norm(s1.values), sup_norm(s2.values))) {
            out.g = eps * s1 + s2;
            out.g.tail_exponent = f.tail_exponent;
            return out;
        }
        growing = size >= prev ? growing + 1 : 0;
        if (growing >= 3)
            throw DivergenceError("block Neumann series does not contract: s too large for eps = " +
                                  std::to_string(eps));
        prev = size;
    }
    throw DivergenceError("block Neumann series did not converge within the term limit");
}

} // namespace

BlockResult perturbed_inverse_block(const ProfilesPtr& profiles, double s, const RadialFunction& f,
                                    const BlockOptions& opt)
{
    if (!(s > 0) || !(opt.eps > 0))
        throw DomainError("block inverse requires s > 0 and eps > 0");
    const BlockScheme B(profiles, s);
    double eps = opt.eps;
    for (int h = 0;; ++h) {
        try {
            return block_solve(B, f, eps, opt);
        } catch (const DivergenceError&) {
            if (h >= opt.max_halvings)
                throw;
            eps *= 0.5;
        }
    }
}

namespace {

struct SymmetricForm {
    Eigen::VectorXd diag, off, root_mass;
};

SymmetricForm schrodinger_form(const Profiles& p)
{
    const RadialOperator op =
        assemble_radial_operator(p.grid, 0.0, &p.V, (p.params.d - 2.0) / p.grid->r_max);
    SymmetricForm f;
    f.root_mass = p.grid->mass.cwiseSqrt();
    f.diag = op.diag.cwiseQuotient(p.grid->mass);
    const Eigen::Index n = f.diag.size();
    f.off = op.upper.cwiseQuotient(f.root_mass.head(n - 1).cwiseProduct(f.root_mass.tail(n - 1)));
    return f;
}

Eigen::VectorXd tridiag_times(const SymmetricForm& f, const Eigen::VectorXd& x)
{
    const Eigen::Index n = x.size();
    Eigen::VectorXd y = f.diag.cwiseProduct(x);
    y.head(n - 1) += f.off.cwiseProduct(x.tail(n - 1));
    y.tail(n - 1) += f.off.cwiseProduct(x.head(n - 1));
    return y;
}

} // namespace

EigenPair lowest_eigenpair(const ProfilesPtr& profiles)
{
    const Profiles& p = *profiles;
    const SymmetricForm form = schrodinger_form(p);
    EigenPair out;
    out.negative_count = sturm_count(form.diag, form.off, 0.0);
    out.e0 = sturm_eigenvalue(form.diag, form.off, 0);
    out.e1 = sturm_eigenvalue(form.diag, form.off, 1);

    const Eigen::Index n = form.diag.size();
    const double gap = out.e1 - out.e0;
    const double sigma = out.e0 - 1e-6 * gap;
    const Eigen::VectorXd shifted = form.diag.array() - sigma;
    const TridiagonalLU<double> lu(form.off, shifted, form.off);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n).normalized();
    double residual = 1;
    for (int it = 0; it < 100; ++it) {
        x = lu.solve(x);
        x.normalize();
        const Eigen::VectorXd Cx = tridiag_times(form, x);
        const double rq = x.dot(Cx);
        residual = (Cx - rq * x).norm();
        out.e0 = rq;
        if (residual < 1e-12 * std::abs(rq))
            break;
    }
    out.residual = residual;
    if (!(residual < 1e-8))
        throw IterationError("inverse iteration did not converge (residual " + std::to_string(residual) + ")");
    Eigen::VectorXd phi = x.cwiseQuotient(form.root_mass);
    if (phi(0) < 0)
        phi = -phi;
    out.phi = RadialFunction(p.grid, std::move(phi));
    return out;
}

double rayleigh_quotient(const ProfilesPtr& profiles, const RadialFunction& f)
{
    const Profiles& p = *profiles;
    const RadialOperator op =
        assemble_radial_operator(p.grid, 0.0, &p.V, (p.params.d - 2.0) / p.grid->r_max);
    return f.values.dot(op.apply_weak(f.values)) / f.values.dot(p.grid->mass.cwiseProduct(f.values));
}

double script_X(const ProfilesPtr& profiles, double tau)
{
    const Profiles& p = *profiles;
    const double s = alpha(p.params, tau);
    const FreeResolvent R(p.grid, s);
    return delta(p.params, s) * inner(R.apply(p.W), p.psi);
}

double script_Wp(const ProfilesPtr& profiles, double tau)
{
    const Profiles& p = *profiles;
    const double s = alpha(p.params, tau);
    const FreeResolvent R(p.grid, s);
    return inner(R.apply(signed_power(p.W, p.params.p)), p.psi);
}

double default_rmax(double s_min) { return std::max(100.0, 8.0 / std::sqrt(s_min)); }

GridPtr make_grid(int d, const GridSpec& spec, double s_min)
{
    const double r_max = spec.r_max > 0 ? spec.r_max : default_rmax(s_min);
    return build_grid(d, r_max, spec.n_inner, spec.n_outer);
}

A1Estimate compute_A1(const ModelParams& m, const GridSpec& spec)
{
    A1Estimate est;
    est.shifts = {1e-2, 1e-3, 1e-4, 1e-5};
    const ProfilesPtr pr = Profiles::make(m, make_grid(m.d, spec, est.shifts.back()));
    std::vector<double> del;
    for (double s : est.shifts) {
        const FreeResolvent R(pr->grid, s);
        del.push_back(delta(m, s));
        est.samples.push_back(del.back() * inner(R.apply(pr->W), pr->psi));
    }
    for (size_t i = 1; i + 1 < est.samples.size(); ++i) {
        const double a = est.samples[i - 1] - est.samples[i], b = est.samples[i] - est.samples[i + 1];
        if (!(a * b > 0 && std::abs(b) < std::abs(a)))
            throw ResolutionError("A1 extrapolation sequence is not monotone");
    }
    // X(s) is a regular series in delta(s); Neville interpolation evaluated at delta = 0.
    std::vector<double> tab = est.samples;
    for (size_t k = 1; k < tab.size(); ++k)
        for (size_t i = tab.size() - 1; i >= k; --i)
            tab[i] = (del[i] * tab[i - 1] - del[i - k] * tab[i]) / (del[i] - del[i - k]);
    est.value = tab.back();
    est.degree = static_cast<int>(tab.size()) - 1;
    if (!(est.value > 0))
        throw ResolutionError("A1 extrapolation is not positive");
    est.closed_form = a1_closed_form(m);
    est.closed_form_rel_diff = std::abs(est.value - est.closed_form) / est.closed_form;
    return est;
}

} // namespace cgs
