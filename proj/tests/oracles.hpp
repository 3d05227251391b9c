#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
{
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1 - z * z) * dp * dp);
    }
    return {x, w};
}

// Composite Gauss-Legendre on [a, b].
inline double quad(const std::function<double(double)>& f, double a, double b, int panels = 400, int order = 10)
{
    static const auto rule = gauss_legendre(10);
    const auto& [x, w] = order == 10 ? rule : gauss_legendre(order);
    const double h = (b - a) / panels;
    double sum = 0;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        for (size_t i = 0; i < x.size(); ++i)
            sum += w[i] * f(mid + 0.5 * h * x[i]);
    }
    return 0.5 * h * sum;
}

// int_0^inf f(r) dr through r = x / (1 - x).
inline double quad_half_line(const std::function<double(double)>& f, int panels = 2000)
{
    return quad(
        [&](double x) {
            if (x >= 1.0)
                return 0.0;
            const double r = x / (1.0 - x);
            return f(r) / ((1.0 - x) * (1.0 - x));
        },
        0.0, 1.0, panels);
}

inline double sphere_area(int d) { return d == 3 ? 4.0 * std::numbers::pi : 2.0 * std::numbers::pi * std::numbers::pi; }

// int_{R^d} f(|x|) dx
inline double radial_integral(int d, const std::function<double(double)>& f, int panels = 2000)
{
    return sphere_area(d) * quad_half_line([&](double r) { return f(r) * std::pow(r, d - 1); }, panels);
}

inline double W(int d, double r) { return std::pow(1.0 + r * r / (d * (d - 2.0)), -(d - 2.0) / 2.0); }

// Sixth-order central differences.
inline double d1(const std::function<double(double)>& f, double x, double h)
{
    return (-f(x - 3 * h) + 9 * f(x - 2 * h) - 45 * f(x - h) + 45 * f(x + h) - 9 * f(x + 2 * h) + f(x + 3 * h)) /
           (60 * h);
}

inline double d2(const std::function<double(double)>& f, double x, double h)
{
    return (2 * f(x - 3 * h) - 27 * f(x - 2 * h) + 270 * f(x - h) - 490 * f(x) + 270 * f(x + h) -
            27 * f(x + 2 * h) + 2 * f(x + 3 * h)) /
           (180 * h * h);
}

// Lambda W = (d-2)/2 W + r W', from the oracle W by differences.
inline double LambdaW(int d, double r)
{
    auto w = [d](double x) { return W(d, std::abs(x)); };
    return (d - 2.0) / 2.0 * W(d, r) + r * d1(w, r, 1e-3);
}

} // namespace oracle
