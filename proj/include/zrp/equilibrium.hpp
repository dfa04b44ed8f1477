//! \file zrp/equilibrium.hpp
//! Product invariant measures: partition function, fugacity/density map,
//! marginal law and exact equilibrium sampling.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "zrp/model.hpp"
#include "zrp/random.hpp"

namespace zrp
{
class Configuration;
class TorusGeometry;

/*!
 * Single-site marginal of the product measure with fugacity beta:
 * p_k = beta^k / (c(k)! Z(beta)), truncated at K where the analytic
 * remainder bound drops below tolerance.
 */
struct EquilibriumProfile
{
    RateFamily family = RateFamily::linear(1.0);
    double beta = 0;
    double gamma = 0;
    double Z = 0;
    double log_Z = 0;
    double var_occ = 0;
    double beta_prime = 0;  //!< d beta / d gamma = beta / var_occ
    std::vector<double> pmf;
    std::vector<double> cdf;  //!< cdf.back() == 1 exactly

    std::size_t k_trunc() const { return pmf.empty() ? 0 : pmf.size() - 1; }
};

inline constexpr double default_series_tol = 1e-16;

//! Z(beta) = sum_k beta^k / c(k)!, summed until the tail bound is below tol
//! (relative to the partial sum).
double partition_function(double beta,
                          RateFamily const& family,
                          double tol = default_series_tol);

//! gamma(beta) = E[eta(0)] under the product measure with fugacity beta.
double mean_occupancy(double beta,
                      RateFamily const& family,
                      double tol = default_series_tol);

//! Fully populated profile at a given fugacity.
EquilibriumProfile profile_of_fugacity(double beta,
                                       RateFamily const& family,
                                       double tol = default_series_tol);

//! Invert gamma(beta) = gamma by bracketed bisection; |gamma(beta) - gamma|
//! <= tol on return.
EquilibriumProfile fugacity_of_density(double gamma,
                                       RateFamily const& family,
                                       double tol = 1e-13);

//! sum k^2 p_k - gamma^2 for the profile's pmf.
double occupancy_variance(EquilibriumProfile const& profile);

//! beta'(gamma) by central difference of fugacity_of_density.
double beta_prime_finite_difference(double gamma,
                                    RateFamily const& family,
                                    double rel_step = 1e-4);

//! Inverse-CDF draw from the truncated marginal.
std::int64_t sample_marginal(Rng& rng, EquilibriumProfile const& profile);

//! Audit dump {family, beta, gamma, Z, var_occ, beta_prime, K_trunc, pmf}.
nlohmann::json profile_to_json(EquilibriumProfile const& profile);
nlohmann::json rate_family_to_json(RateFamily const& family);
RateFamily rate_family_from_json(nlohmann::json const& j);
}  // namespace zrp
