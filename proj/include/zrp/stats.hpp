//! \file zrp/stats.hpp
//! Estimators and tests turning simulated functionals into verdicts.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zrp/stable.hpp"

namespace zrp
{
//---------------------------------------------------------------------------//
struct AutocovEstimate
{
    double dt = 1;
    std::vector<double> value;  //!< C(l dt), l = 0..max_lag
    std::vector<double> se;     //!< batch-means standard error
    double mean = 0;
    std::size_t samples = 0;  //!< time samples per channel
    std::size_t channels = 1;
    std::size_t batches = 0;
    //! Per-batch estimates, same normalization as value.
    std::vector<std::vector<double>> batch_values;

    double lag_time(std::size_t l) const { return dt * static_cast<double>(l); }
};

/*!
 * Streaming autocovariance of one or more equally spaced channels sharing
 * a common mean (e.g. the sites of a translation invariant system).
 *
 * Uses the biased normalization (divide by the series length). Batches are
 * contiguous blocks of samples_per_batch time samples, assigned by the later
 * time of each pair.
 */
class AutocovAccumulator
{
  public:
    AutocovAccumulator(std::size_t channels,
                       std::size_t max_lag,
                       std::size_t samples_per_batch);

    void push(std::span<double const> snapshot);
    //! Pool another accumulator's batches (its ring buffer is not joined).
    void merge(AutocovAccumulator const& other);

    std::size_t samples() const { return samples_; }
    std::size_t max_lag() const { return max_lag_; }

    AutocovEstimate finish(double dt) const;

  private:
    struct Batch
    {
        std::size_t samples = 0;
        std::vector<double> sxx, sa, sb, pairs;
        double sum = 0;
    };
    Batch& current_batch();

    std::size_t channels_;
    std::size_t max_lag_;
    std::size_t per_batch_;
    std::size_t samples_ = 0;
    std::vector<std::vector<double>> ring_;
    std::vector<Batch> batches_;
};

//! Single-channel autocovariance; throws if series.size() < 2 max_lag.
AutocovEstimate autocovariance(std::span<double const> series,
                               std::size_t max_lag,
                               double dt = 1.0,
                               std::size_t batches = 20);

//! True when the integrated autocovariance is finite for (d, alpha).
bool integrated_autocovariance_finite(int d, double alpha);

struct IntegratedAutocov
{
    std::optional<double> value;  //!< 2 int_0^T C(s) ds
    double se = 0;
    std::size_t cutoff_lag = 0;
    std::string warning;
};

//! Trapezoidal 2 int C up to the first lag with C < 2 SE.
IntegratedAutocov integrated_autocovariance(AutocovEstimate const& est);
//! Same, refusing (with a warning) in regimes where the integral diverges.
IntegratedAutocov integrated_autocovariance(AutocovEstimate const& est,
                                            int d,
                                            double alpha);

//---------------------------------------------------------------------------//
struct ScalingFit
{
    std::vector<double> N;
    std::vector<double> variance;
    std::vector<double> se;
    double slope = 0;
    double intercept = 0;
    double slope_se = 0;
    double ci_low = 0;
    double ci_high = 0;
};

//! Unbiased sample variance with its delete-one jackknife standard error.
std::pair<double, double> jackknife_variance(std::span<double const> xs);

/*!
 * samples[i] are replicas of A(t N[i]); per-N variance with jackknife SE and
 * a weighted least squares fit of log Var against log N (95% slope CI).
 */
ScalingFit variance_scaling(std::span<double const> N,
                            std::vector<std::vector<double>> const& samples);

//---------------------------------------------------------------------------//
struct TestResult
{
    double statistic = 0;
    double p_value = 0;
    std::size_t dof = 0;
};

//! Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

TestResult ks_test(std::span<double const> samples,
                   std::function<double(double)> const& cdf);

double normal_cdf(double x, double variance);

//! counts[k] observed in class k; pmf over the same classes (any missing
//! mass is assigned to the last class). Classes are merged left to right
//! until every expected count is at least 5.
TestResult chi_square(std::span<std::int64_t const> counts,
                      std::span<double const> pmf);

//---------------------------------------------------------------------------//
struct Verdict
{
    std::string check;
    double target = 0;
    double estimate = 0;
    double se = 0;
    double tolerance = 0;
    bool pass = false;
};

nlohmann::json to_json(Verdict const& v);

struct LawReport
{
    std::vector<Verdict> verdicts;
    bool pass = false;
};

struct LawCheckOptions
{
    double ks_level = 0.01;  //!< family-wise, split over the times
    double cov_se = 4.0;
};

/*!
 * values[r][j] = A(t_j N) / Lambda(N) for replica r. Checks each marginal
 * against N(0, sigma^2 t_j^{2 theta}) by KS and every pairwise covariance
 * against sigma^2 fbm_covariance(theta, t_i, t_j).
 */
LawReport hurst_and_law_check(std::vector<std::vector<double>> const& values,
                              std::span<double const> times,
                              double theta,
                              double sigma,
                              LawCheckOptions const& options = {});

//! Resolve sigma from the law (or the measured estimate) and normalize.
LawReport hurst_and_law_check(std::vector<std::vector<double>> const& raw,
                              std::span<double const> times,
                              double N,
                              LimitLaw const& law,
                              std::optional<double> measured_sigma = {},
                              LawCheckOptions const& options = {});
}  // namespace zrp
