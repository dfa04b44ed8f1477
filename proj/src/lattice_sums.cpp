//! \file lattice_sums.cpp
#include "zrp/lattice_sums.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "zrp/error.hpp"

namespace zrp::lattice
{
namespace
{
constexpr double pi = std::numbers::pi;

// Jacobi theta_3(0, i t) = sum_n exp(-pi n^2 t), t >= 1 here.
double theta(double t)
{
    double sum = 1.0;
    for (int n = 1; n < 20; ++n)
    {
        double const term = 2.0 * std::exp(-pi * n * n * t);
        sum += term;
        if (term < 1e-18 * sum)
            break;
    }
    return sum;
}
}  // namespace

double riemann_zeta(double s)
{
    if (s == 1.0)
        throw DomainError("zeta(s) has a pole at s = 1");
    return boost::math::zeta(s);
}

double hurwitz_zeta(double s, double q)
{
    if (!(s > 1.0) || !(q > 0.0))
        throw DomainError("hurwitz_zeta requires s > 1 and q > 0");
    constexpr int n_direct = 32;
    constexpr int n_bernoulli = 16;
    double sum = 0.0;
    for (int k = n_direct - 1; k >= 0; --k)
        sum += std::pow(q + k, -s);
    double const x = q + n_direct;
    sum += std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
    // Bernoulli correction terms B_{2j}/(2j)! * s(s+1)...(s+2j-2) x^{-s-2j+1}
    double rising = s;  // s (s+1) ... (s + 2j - 2)
    double fact = 2.0;  // (2j)!
    double xpow = std::pow(x, -s - 1.0);
    for (int j = 1; j <= n_bernoulli; ++j)
    {
        double const term
            = boost::math::bernoulli_b2n<double>(j) / fact * rising * xpow;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum))
            break;
        rising *= (s + 2 * j - 1) * (s + 2 * j);
        fact *= (2 * j + 1) * (2 * j + 2);
        xpow /= x * x;
    }
    return sum;
}

double dirichlet_beta(double s)
{
    if (!(s > 0.0))
        throw DomainError("dirichlet_beta requires s > 0");
    if (s <= 1.0)
    {
        // Alternating series with Cohen-Villegas-Zagier acceleration.
        int const n = 40;
        double d = std::pow(3.0 + std::sqrt(8.0), n);
        d = (d + 1.0 / d) / 2.0;
        double b = -1.0, c = -d, sum = 0.0;
        for (int k = 0; k < n; ++k)
        {
            c = b - c;
            sum += c * std::pow(2.0 * k + 1.0, -s);
            b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0));
        }
        return sum / d;
    }
    return std::pow(4.0, -s)
           * (hurwitz_zeta(s, 0.25) - hurwitz_zeta(s, 0.75));
}

double square_lattice_sum(double s)
{
    if (!(s > 1.0))
        throw DomainError("square lattice sum diverges for s <= 1");
    return 4.0 * riemann_zeta(s) * dirichlet_beta(s);
}

double square_lattice_sum_bessel(double s)
{
    if (!(s > 1.0))
        throw DomainError("square lattice sum diverges for s <= 1");
    double const nu = s - 0.5;
    double const gs = std::tgamma(s);
    double sum = 2.0 * riemann_zeta(2.0 * s)
                 + 2.0 * std::sqrt(pi) * std::tgamma(s - 0.5) / gs
                       * riemann_zeta(2.0 * s - 1.0);
    double bessel_part = 0.0;
    for (int n = 1; n < 64; ++n)
    {
        double row = 0.0;
        for (int p = 1; p * n < 64; ++p)
        {
            double const arg = 2.0 * pi * p * n;
            double const term = std::pow(static_cast<double>(p) / n, nu)
                                * boost::math::cyl_bessel_k(nu, arg);
            row += term;
            if (term < 1e-20)
                break;
        }
        bessel_part += row;
        if (row < 1e-20)
            break;
    }
    sum += 8.0 * std::pow(pi, s) / gs * bessel_part;
    return sum;
}

double epstein_theta(int d, double s)
{
    if (d < 1)
        throw DomainError("dimension must be positive");
    if (!(s > 0.5 * d))
        throw DomainError("lattice power sum diverges for 2s <= d");
    boost::math::quadrature::exp_sinh<double> integrator;
    auto integral = [&](double a) {
        auto f = [d, a](double u) {
            double const t = 1.0 + u;
            return std::pow(t, a) * (std::pow(theta(t), d) - 1.0);
        };
        return integrator.integrate(f, 1e-15);
    };
    double const bracket = integral(s - 1.0) + integral(0.5 * d - s - 1.0)
                           + 1.0 / (s - 0.5 * d) - 1.0 / s;
    return std::pow(pi, s) / std::tgamma(s) * bracket;
}

double power_sum(int d, double p)
{
    if (!(p > d))
        throw DomainError("lattice power sum diverges for p <= d");
    if (d == 1)
        return 2.0 * riemann_zeta(p);
    if (d == 2)
        return square_lattice_sum(0.5 * p);
    return epstein_theta(d, 0.5 * p);
}
}  // namespace zrp::lattice
