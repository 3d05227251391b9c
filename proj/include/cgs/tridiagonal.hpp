#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cgs {

// Tridiagonal LU with partial pivoting (the gttrf/gttrs scheme).
// lower(i) = A(i+1,i), upper(i) = A(i,i+1).
template <typename Scalar>
class TridiagonalLU {
public:
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    TridiagonalLU() = default;
    TridiagonalLU(const Vec& lower, const Vec& diag, const Vec& upper) { factor(lower, diag, upper); }

    void factor(const Vec& lower, const Vec& diag, const Vec& upper)
    {
        using std::abs;
        const Eigen::Index n = diag.size();
        dl_ = lower;
        d_ = diag;
        du_ = upper;
        du2_ = Vec::Zero(n > 2 ? n - 2 : 0);
        swapped_.assign(n > 1 ? n - 1 : 0, false);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (abs(d_(i)) >= abs(dl_(i))) {
                if (d_(i) != Scalar(0)) {
                    const Scalar fact = dl_(i) / d_(i);
                    dl_(i) = fact;
                    d_(i + 1) -= fact * du_(i);
                }
            } else {
                const Scalar fact = d_(i) / dl_(i);
                d_(i) = dl_(i);
                dl_(i) = fact;
                const Scalar temp = du_(i);
                du_(i) = d_(i + 1);
                d_(i + 1) = temp - fact * d_(i + 1);
                if (i + 2 < n) {
                    du2_(i) = du_(i + 1);
                    du_(i + 1) = -fact * du_(i + 1);
                }
                swapped_[i] = true;
            }
        }
        min_pivot_ = n > 0 ? d_.cwiseAbs().minCoeff() : Scalar(0);
        max_pivot_ = n > 0 ? d_.cwiseAbs().maxCoeff() : Scalar(0);
    }

    bool singular() const { return !(min_pivot_ > max_pivot_ * Scalar(1e-300)); }
    Scalar min_pivot() const { return min_pivot_; }
    Scalar max_pivot() const { return max_pivot_; }

    Vec solve(Vec b) const
    {
        const Eigen::Index n = d_.size();
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (!swapped_[i]) {
                b(i + 1) -= dl_(i) * b(i);
            } else {
                const Scalar temp = b(i);
                b(i) = b(i + 1);
                b(i + 1) = temp - dl_(i) * b(i);
            }
        }
        b(n - 1) /= d_(n - 1);
        if (n > 1)
            b(n - 2) = (b(n - 2) - du_(n - 2) * b(n - 1)) / d_(n - 2);
        for (Eigen::Index i = n - 3; i >= 0; --i)
            b(i) = (b(i) - du_(i) * b(i + 1) - du2_(i) * b(i + 2)) / d_(i);
        return b;
    }

private:
    Vec dl_, d_, du_, du2_;
    std::vector<bool> swapped_;
    Scalar min_pivot_ = 0, max_pivot_ = 0;
};

// Symmetric tridiagonal in flux form: row i is
//   (c_{i-1} + c_i + q_i) u_i - c_{i-1} u_{i-1} - c_i u_{i+1},
// with conductances c > 0 and reaction q of either sign. Elimination tracks the
// pivot excess e_i = pivot_i - c_i, so q is never swamped by the conductances,
// and back substitution works on differences u_i - u_{i+1}.
template <typename Scalar>
class FluxFormLU {
public:
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    FluxFormLU() = default;
    FluxFormLU(const Vec& conductance, const Vec& reaction) { factor(conductance, reaction); }

    void factor(const Vec& conductance, const Vec& reaction)
    {
        using std::abs;
        const Eigen::Index n = reaction.size();
        if (conductance.size() + 1 != n)
            throw std::invalid_argument("FluxFormLU: size mismatch");
        c_ = conductance;
        e_.resize(n);
        piv_.resize(n);
        min_ratio_ = std::numeric_limits<Scalar>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            e_(i) = reaction(i);
            if (i > 0)
                e_(i) += c_(i - 1) * e_(i - 1) / piv_(i - 1);
            const Scalar ci = i + 1 < n ? c_(i) : Scalar(0);
            piv_(i) = ci + e_(i);
            const Scalar scale = ci + abs(reaction(i)) + (i > 0 ? c_(i - 1) : Scalar(0));
            min_ratio_ = std::min(min_ratio_, abs(piv_(i)) / scale);
        }
    }

    // Smallest |pivot| relative to its row scale.
    Scalar min_pivot_ratio() const { return min_ratio_; }

    Vec solve(Vec b) const
    {
        const Eigen::Index n = piv_.size();
        for (Eigen::Index i = 1; i < n; ++i)
            b(i) += c_(i - 1) * b(i - 1) / piv_(i - 1);
        b(n - 1) /= piv_(n - 1);
        for (Eigen::Index i = n - 2; i >= 0; --i)
            b(i) = b(i + 1) + (b(i) - e_(i) * b(i + 1)) / piv_(i);
        return b;
    }

private:
    Vec c_, e_, piv_;
    Scalar min_ratio_ = 0;
};

// Number of eigenvalues of the symmetric tridiagonal (diag, off) strictly below sigma.
int sturm_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double sigma);

// k-th smallest eigenvalue (k = 0, 1, ...) by Sturm bisection.
double sturm_eigenvalue(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, int k, double rel_tol = 1e-15);

} // namespace cgs
