//! \file zrp/stable.hpp
//! Limit densities at the origin, fBm covariances and limit-law constants.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "zrp/equilibrium.hpp"
#include "zrp/observable.hpp"
#include "zrp/random.hpp"

namespace zrp
{
enum class StableBranch
{
    jump,      //!< alpha < 2: symbol c |k|^alpha
    boundary,  //!< alpha = 2: Gaussian with matrix K
    gaussian,  //!< alpha > 2: Gaussian with matrix A
};

std::string to_string(StableBranch branch);

struct StableDensitySpec
{
    int d = 1;
    double alpha = 1.5;
    StableBranch branch = StableBranch::jump;
    double symbol_constant = 0;  //!< c_{d,alpha} (jump branch)
    Eigen::MatrixXd covariance;  //!< A or K (Gaussian branches)
};

//! c_{d,alpha} = int (1 - cos v_1) |v|^{-(d+alpha)} dv, 0 < alpha < 2.
double continuum_symbol_constant(int d, double alpha);
//! K_{d,2}: half the surface integral of v v^T over the unit sphere.
Eigen::MatrixXd boundary_matrix(int d);
//! A: sum over Z^d \ {0} of y y^T |y|^{-(d+alpha)}, alpha > 2.
Eigen::MatrixXd gaussian_matrix(int d, double alpha);

StableDensitySpec make_stable_spec(int d, double alpha);

//! f_t(0) for the limit density of the rescaled walk.
double stable_density_at_origin(double t, int d, double alpha);
double stable_density_at_origin(double t, StableDensitySpec const& spec);

//! f_t(u) in d = 1 for each u.
std::vector<double> stable_density_1d(double t,
                                      std::span<double const> us,
                                      double alpha);

//---------------------------------------------------------------------------//
double fbm_covariance(double theta, double t, double s);

//! Exact Gaussian sampler on a fixed time grid (symmetric square root).
class FbmSampler
{
  public:
    FbmSampler(double theta, std::vector<double> grid);
    std::vector<double> const& grid() const { return grid_; }
    std::vector<double> sample(Rng& rng) const;

  private:
    double theta_;
    std::vector<double> grid_;
    Eigen::MatrixXd root_;
};

std::vector<double>
sample_fbm(Rng& rng, double theta, std::vector<double> const& grid);

//---------------------------------------------------------------------------//
struct LimitLaw
{
    int d = 1;
    double alpha = 1.5;
    double hurst = 0.5;
    std::optional<double> scale;  //!< empty: sigma must be measured
    std::string normalizer_rule;
    std::string regime;
    std::string limit_process;  //!< "fBm" or "Brownian motion"

    bool measured() const { return !scale.has_value(); }
    double normalizer(double N) const;
};

LimitLaw theorem_coefficient(int d,
                             double alpha,
                             EquilibriumProfile const& profile,
                             ObservableSpec const& obs);

//! Leading constant of the time decay of the mean relaxation of V.
double relaxation_constant(int d,
                           double alpha,
                           EquilibriumProfile const& profile,
                           ObservableSpec const& obs);

//! {d, alpha, theta, sigma or "measured", lambda_rule, relaxation_constant}
nlohmann::json regime_report(int d,
                             double alpha,
                             EquilibriumProfile const& profile,
                             ObservableSpec const& obs);
}  // namespace zrp
