//! \file stable.cpp
#include "zrp/stable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "zrp/error.hpp"
#include "zrp/lattice_sums.hpp"
#include "zrp/quadrature.hpp"
#include "zrp/walk.hpp"

namespace zrp
{
namespace
{
constexpr double pi = std::numbers::pi;

double sphere_area(int d)
{
    return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

void check_alpha(double alpha)
{
    if (!(alpha > 0))
        throw DomainError("alpha must be > 0");
}

// int_0^inf (1 - cos u) u^{-1-alpha} du
double one_minus_cos_moment(double alpha)
{
    boost::math::quadrature::tanh_sinh<double> ts;
    double const head = ts.integrate(
        [alpha](double u) {
            if (u < 1e-3)
            {
                double const u2 = u * u;
                return std::pow(u, 1.0 - alpha)
                       * (0.5 - u2 / 24.0 + u2 * u2 / 720.0);
            }
            double const s = std::sin(0.5 * u);
            return 2.0 * s * s * std::pow(u, -1.0 - alpha);
        },
        0.0, 1.0);
    // int_1^inf cos(u) u^{-1-alpha} du with u = 1 + x
    boost::math::quadrature::ooura_fourier_cos<double> fc;
    boost::math::quadrature::ooura_fourier_sin<double> fs;
    auto g = [alpha](double x) { return std::pow(1.0 + x, -1.0 - alpha); };
    double const c = fc.integrate(g, 1.0).first;
    double const s = fs.integrate(g, 1.0).first;
    double const osc = std::cos(1.0) * c - std::sin(1.0) * s;
    return head + 1.0 / alpha - osc;
}

// int over the unit sphere of |v_1|^p
double sphere_moment(int d, double p)
{
    if (d == 1)
        return 2.0;
    boost::math::quadrature::tanh_sinh<double> ts;
    double const polar = ts.integrate(
        [p, d](double th) {
            return std::pow(std::cos(th), p) * std::pow(std::sin(th), d - 2);
        },
        0.0, 0.5 * pi);
    return 2.0 * sphere_area(d - 1) * polar;
}
}  // namespace

std::string to_string(StableBranch branch)
{
    switch (branch)
    {
        case StableBranch::jump:
            return "jump";
        case StableBranch::boundary:
            return "boundary";
        case StableBranch::gaussian:
            return "gaussian";
    }
    return "?";
}

double continuum_symbol_constant(int d, double alpha)
{
    check_alpha(alpha);
    if (!(alpha < 2))
        throw DomainError("continuum symbol constant needs alpha < 2");
    return sphere_moment(d, alpha) * one_minus_cos_moment(alpha);
}

Eigen::MatrixXd boundary_matrix(int d)
{
    double const diag = 0.5 * sphere_moment(d, 2.0);
    return diag * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd gaussian_matrix(int d, double alpha)
{
    check_alpha(alpha);
    if (!(alpha > 2))
        throw DomainError("lattice second moment is finite only for alpha > 2");
    // By cubic symmetry the off-diagonal sums vanish and each diagonal entry
    // is 1/d of the sum of |y|^2 |y|^{-(d+alpha)}.
    double const diag = lattice::power_sum(d, d + alpha - 2.0) / d;
    return diag * Eigen::MatrixXd::Identity(d, d);
}

StableDensitySpec make_stable_spec(int d, double alpha)
{
    check_alpha(alpha);
    if (d < 1)
        throw ValidationError("dimension must be >= 1");
    StableDensitySpec spec;
    spec.d = d;
    spec.alpha = alpha;
    if (alpha < 2)
    {
        spec.branch = StableBranch::jump;
        spec.symbol_constant = continuum_symbol_constant(d, alpha);
    }
    else if (alpha == 2)
    {
        spec.branch = StableBranch::boundary;
        spec.covariance = boundary_matrix(d);
    }
    else
    {
        spec.branch = StableBranch::gaussian;
        spec.covariance = gaussian_matrix(d, alpha);
    }
    return spec;
}

double stable_density_at_origin(double t, StableDensitySpec const& spec)
{
    if (!(t > 0))
        throw DomainError("density time must be > 0");
    int const d = spec.d;
    if (spec.branch == StableBranch::jump)
    {
        double const c = spec.symbol_constant;
        double const a = spec.alpha;
        boost::math::quadrature::exp_sinh<double> es;
        double const radial = es.integrate(
            [&](double r) { return std::exp(-t * c * std::pow(r, a))
                                   * std::pow(r, d - 1); },
            0.0, std::numeric_limits<double>::infinity());
        return std::pow(2 * pi, -d) * sphere_area(d) * radial;
    }
    double const det = spec.covariance.determinant();
    return std::pow(2 * pi * t, -0.5 * d) / std::sqrt(det);
}

double stable_density_at_origin(double t, int d, double alpha)
{
    return stable_density_at_origin(t, make_stable_spec(d, alpha));
}

std::vector<double> stable_density_1d(double t,
                                      std::span<double const> us,
                                      double alpha)
{
    if (!(t > 0))
        throw DomainError("density time must be > 0");
    auto const spec = make_stable_spec(1, alpha);
    std::vector<double> out(us.size());
    if (spec.branch == StableBranch::jump)
    {
        double const c = spec.symbol_constant;
        double const k_limit = std::pow(70.0 / (t * c), 1.0 / alpha);
        return damped_cosine_transform(
            [c, alpha](double k) { return c * std::pow(k, alpha); }, t,
            k_limit, us, 1e-13);
    }
    double const var = t * spec.covariance(0, 0);
    for (std::size_t i = 0; i < us.size(); ++i)
        out[i] = std::exp(-0.5 * us[i] * us[i] / var)
                 / std::sqrt(2 * pi * var);
    return out;
}

//---------------------------------------------------------------------------//
double fbm_covariance(double theta, double t, double s)
{
    double const h2 = 2.0 * theta;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2)
                  - std::pow(std::abs(t - s), h2));
}

FbmSampler::FbmSampler(double theta, std::vector<double> grid)
    : theta_(theta), grid_(std::move(grid))
{
    if (!(theta > 0 && theta < 1))
        throw DomainError("Hurst index must lie in (0, 1)");
    if (grid_.size() > 2048)
        throw ValidationError("fBm grid limited to 2048 points");
    auto const n = static_cast<Eigen::Index>(grid_.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cov(i, j) = fbm_covariance(theta, grid_[i], grid_[j]);
    cov.diagonal().array() += 1e-12;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw ConvergenceError("fBm covariance factorization failed");
    Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root_ = eig.eigenvectors() * ev.asDiagonal()
            * eig.eigenvectors().transpose();
}

std::vector<double> FbmSampler::sample(Rng& rng) const
{
    auto const n = root_.rows();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
        z(i) = rng.normal();
    Eigen::VectorXd x = root_ * z;
    return {x.data(), x.data() + n};
}

std::vector<double>
sample_fbm(Rng& rng, double theta, std::vector<double> const& grid)
{
    return FbmSampler(theta, grid).sample(rng);
}

//---------------------------------------------------------------------------//
double LimitLaw::normalizer(double N) const
{
    return zrp::normalizer(N, d, alpha);
}

LimitLaw theorem_coefficient(int d,
                             double alpha,
                             EquilibriumProfile const& profile,
                             ObservableSpec const& obs)
{
    check_alpha(alpha);
    LimitLaw law;
    law.d = d;
    law.alpha = alpha;
    law.normalizer_rule = normalizer_rule(d, alpha);
    law.regime = regime_label(d, alpha);
    law.limit_process = "Brownian motion";

    bool const explicit_scale
        = (d == 1 && alpha >= 1) || (d == 2 && alpha >= 2);
    if (!explicit_scale)
        return law;

    double const vp = vbar_prime_of(obs, profile);
    double const beta = profile.beta;
    double const bp = profile.beta_prime;
    double const f1 = stable_density_at_origin(1.0, d, alpha);

    double sigma2;
    if (d == 1 && alpha > 1 && alpha < 2)
    {
        law.hurst = 1.0 - 1.0 / (2.0 * alpha);
        law.limit_process = "fBm";
        sigma2 = 2 * alpha * alpha / ((alpha - 1) * (2 * alpha - 1)) * vp * vp
                 * beta / std::pow(bp, 1.0 + 1.0 / alpha) * f1;
    }
    else if (d == 1 && alpha >= 2)
    {
        law.hurst = 0.75;
        law.limit_process = "fBm";
        sigma2 = 8.0 / 3.0 * vp * vp * beta / std::pow(bp, 1.5) * f1;
    }
    else
    {
        // d = 1, alpha = 1 and d = 2, alpha >= 2 share the log-corrected form.
        sigma2 = 2.0 * f1 * (vp / bp) * (vp / bp) * beta;
    }
    law.scale = std::sqrt(sigma2);
    return law;
}

double relaxation_constant(int d,
                           double alpha,
                           EquilibriumProfile const& profile,
                           ObservableSpec const& obs)
{
    double const vp = vbar_prime_of(obs, profile);
    double const f1 = stable_density_at_origin(1.0, d, alpha);
    double const expo = d / std::min(2.0, alpha);
    return vp * vp * profile.var_occ * f1
           / std::pow(2.0 * profile.beta_prime, expo);
}

nlohmann::json regime_report(int d,
                             double alpha,
                             EquilibriumProfile const& profile,
                             ObservableSpec const& obs)
{
    auto const law = theorem_coefficient(d, alpha, profile, obs);
    nlohmann::json j;
    j["d"] = d;
    j["alpha"] = alpha;
    j["regime"] = law.regime;
    j["theta"] = law.hurst;
    if (law.measured())
        j["sigma"] = "measured";
    else
        j["sigma"] = *law.scale;
    j["limit_process"] = law.limit_process;
    j["lambda_rule"] = law.normalizer_rule;
    j["relaxation_constant"] = relaxation_constant(d, alpha, profile, obs);
    j["f1_origin"] = stable_density_at_origin(1.0, d, alpha);
    return j;
}
}  // namespace zrp
