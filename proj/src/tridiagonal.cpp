#include "cgs/tridiagonal.hpp"

#include <algorithm>
#include <limits>

namespace cgs {

int sturm_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double sigma)
{
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    int count = 0;
    double q = diag(0) - sigma;
    if (q == 0)
        q = -tiny;
    if (q < 0)
        ++count;
    for (Eigen::Index i = 1; i < diag.size(); ++i) {
        q = diag(i) - sigma - off(i - 1) * off(i - 1) / q;
        if (q == 0)
            q = -tiny;
        if (q < 0)
            ++count;
    }
    return count;
}

double sturm_eigenvalue(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, int k, double rel_tol)
{
    // Gershgorin bounds.
    const Eigen::Index n = diag.size();
    double lo = std::numeric_limits<double>::max(), hi = -lo;
    for (Eigen::Index i = 0; i < n; ++i) {
        double rad = 0;
        if (i > 0)
            rad += std::abs(off(i - 1));
        if (i + 1 < n)
            rad += std::abs(off(i));
        lo = std::min(lo, diag(i) - rad);
        hi = std::max(hi, diag(i) + rad);
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(diag, off, mid) > k)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= rel_tol * std::max(std::abs(mid), 1e-30 * scale) || hi - lo <= 4 * std::numeric_limits<double>::denorm_min())
            break;
    }
    return 0.5 * (lo + hi);
}

} // namespace cgs
