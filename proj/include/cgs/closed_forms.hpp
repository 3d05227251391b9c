#pragma once

#include <cmath>
#include <utility>

namespace cgs {

struct ModelParams {
    int d = 3;
    double p = 4.0;
    double two_star = 6.0;

    // Throws DomainError outside d in {3,4} and 4/(d-2) - 1 < p < (d+2)/(d-2).
    static ModelParams make(int d, double p);

    double critical_power() const { return (d + 2.0) / (d - 2.0); }
    double linear_power() const { return 4.0 / (d - 2.0); }
};

struct Exponents {
    double q;
    double theta_big;
    double nu;
    double theta_small;
};

double gamma_fn(double x);
double sphere_area(int d);

template <typename Scalar>
Scalar eval_W(const ModelParams& m, Scalar r)
{
    using std::pow;
    const Scalar c = Scalar(m.d * (m.d - 2));
    return pow(Scalar(1) + r * r / c, -Scalar(m.d - 2) / Scalar(2));
}

template <typename Scalar>
Scalar eval_W_prime(const ModelParams& m, Scalar r)
{
    using std::pow;
    const Scalar c = Scalar(m.d * (m.d - 2));
    return -Scalar(m.d - 2) * r / c * pow(Scalar(1) + r * r / c, -Scalar(m.d) / Scalar(2));
}

template <typename Scalar>
Scalar eval_LambdaW(const ModelParams& m, Scalar r)
{
    using std::pow;
    const Scalar c = Scalar(m.d * (m.d - 2));
    const Scalar pre = Scalar(m.d - 2) / Scalar(2) - r * r / Scalar(2 * m.d);
    return pre * pow(Scalar(1) + r * r / c, -Scalar(m.d) / Scalar(2));
}

template <typename Scalar>
Scalar eval_V(const ModelParams& m, Scalar r)
{
    using std::pow;
    return -Scalar(m.d + 2) / Scalar(m.d - 2) * pow(eval_W<Scalar>(m, r), Scalar(4) / Scalar(m.d - 2));
}

double delta(const ModelParams& m, double s);
double beta(const ModelParams& m, double s);
double alpha(const ModelParams& m, double t);

std::pair<double, double> interval_I(double t, double Kp, double A1);

// p = d/(d-2) falls in the first branch of nu_q (d/(2q)).
Exponents compute_exponents(const ModelParams& m, double q);

// ||W||_r^r over R^d, through the Beta-function reduction of the radial integral.
double w_power_integral(const ModelParams& m, double r);

// <W^r, LambdaW> from the integration-by-parts identity.
double w_power_lambda_pairing(const ModelParams& m, double r);

// ((4 - (d-2)(p-1)) / (2(p+1))) ||W||_{p+1}^{p+1}
double kp_closed_form(const ModelParams& m);

// Fourier-side value of lim delta(s) <(-Delta+s)^{-1} W, V LambdaW>.
double a1_closed_form(const ModelParams& m);

// int_{|xi|<=1} dxi / ((|xi|^2 + s)|xi|^2)
double fourier_ball_integral(int d, double s);

// Radius at which T_lambda samples its argument.
inline double dilation_radius(int d, double lambda, double r)
{
    return std::pow(lambda, -2.0 / (d - 2)) * r;
}

} // namespace cgs
