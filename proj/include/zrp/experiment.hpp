//! \file zrp/experiment.hpp
//! Experiment plans, replica orchestration, result files and verdicts.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zrp/equilibrium.hpp"
#include "zrp/model.hpp"
#include "zrp/observable.hpp"
#include "zrp/recorder.hpp"
#include "zrp/stats.hpp"

namespace zrp
{
inline constexpr char const* artifact_version = "1.0.0";

//---------------------------------------------------------------------------//
//! Run fn(i) for i in [0, count) on `workers` threads. The first exception
//! (lowest index) is rethrown after all threads have joined.
void parallel_for(std::size_t count,
                  unsigned workers,
                  std::function<void(std::size_t)> const& fn);

//---------------------------------------------------------------------------//
//! Site-averaged autocovariance settings attached to a run.
struct AutocovSettings
{
    double dt = 1.0;
    std::size_t max_lag = 50;
    double burn_in = 0.0;
    std::size_t site_stride = 1;
    std::size_t batches_per_replica = 1;
};

struct EnsembleSpec
{
    ModelSpec model;
    ObservableSpec obs = ObservableSpec::occupation();
    EquilibriumProfile profile;
    std::vector<double> N_grid;
    std::vector<double> t_grid;
    std::size_t replicas = 100;
    std::uint64_t seed = 0;
    std::uint64_t first_replica = 0;  //!< seed index offset
    unsigned workers = 1;
    RecorderOptions recorder;
    std::optional<AutocovSettings> autocov;
    std::size_t autocov_replicas = 0;  //!< replicas feeding the autocovariance
};

struct Ensemble
{
    std::vector<double> N_grid;
    std::vector<double> t_grid;
    //! A[r][i * t_grid.size() + j] = A(t_j N_i) for replica r.
    std::vector<std::vector<double>> A;
    std::optional<AutocovEstimate> autocov;
    std::uint64_t events = 0;

    double at(std::size_t r, std::size_t iN, std::size_t jt) const
    {
        return A[r][iN * t_grid.size() + jt];
    }
    //! Replica values of A(t_j N_i).
    std::vector<double> column(std::size_t iN, std::size_t jt) const;
};

Ensemble run_ensemble(EnsembleSpec const& spec);

//! One long run (or several replicas) sampled for the autocovariance only.
struct AutocovRunSpec
{
    ModelSpec model;
    EquilibriumProfile profile;
    double horizon = 1e3;
    AutocovSettings settings;
    std::size_t replicas = 1;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    Centering centering = Centering::realized_density;
};

struct AutocovRun
{
    AutocovEstimate estimate;
    std::uint64_t events = 0;
};

AutocovRun run_autocov(AutocovRunSpec const& spec);

//! Stationarity: chi-square of the site histogram of eta_T against the pmf.
struct StationarityResult
{
    std::vector<double> p_values;
    std::vector<std::uint64_t> events;
    bool conserved = true;
};

StationarityResult run_stationarity(ModelSpec const& model,
                                    EquilibriumProfile const& profile,
                                    std::size_t runs,
                                    double horizon,
                                    std::uint64_t seed,
                                    unsigned workers);

//! Least squares slope of log C(l dt) against log(l dt) over [t_lo, t_hi].
std::pair<double, double> decay_exponent(AutocovEstimate const& est,
                                         double t_lo,
                                         double t_hi);

//---------------------------------------------------------------------------//
enum class ExperimentKind
{
    sample_equilibrium,
    stationarity,
    autocov,
    scaling,
    fdd_law,
    lclt,
    constants,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string const& name);

struct ExperimentPlan
{
    ExperimentKind experiment = ExperimentKind::scaling;
    ModelSpec model;
    nlohmann::json observable = {{"kind", "occupation"}};
    std::vector<double> N_grid;
    std::vector<double> t_grid{1.0};
    std::size_t replicas = 100;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string output = "zrp_out";
    Centering centering = Centering::ensemble;
    //! Experiment-specific blocks, validated when the experiment runs.
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json raw;  //!< plan as loaded
};

//! Parse and validate; errors name the offending field and bound.
ExperimentPlan plan_from_json(nlohmann::json const& j);
ExperimentPlan load_plan(std::filesystem::path const& path);
void validate_plan(ExperimentPlan const& plan);

//! Smallest admissible L for the plan (1 when the check does not apply).
std::int64_t minimum_side(ExperimentPlan const& plan);

EquilibriumProfile plan_profile(ExperimentPlan const& plan);
ObservableSpec plan_observable(ExperimentPlan const& plan,
                               EquilibriumProfile const& profile);

struct RunReport
{
    nlohmann::json summary;
    std::vector<Verdict> verdicts;
    bool pass() const;
};

/*!
 * Execute the plan and write paths.csv (when applicable), summary.json,
 * constants.json and manifest.json into plan.output.
 */
RunReport run_plan(ExperimentPlan const& plan);

//! Re-evaluate the checks for a finished run from its files.
RunReport verify_results(ExperimentPlan const& plan,
                         std::filesystem::path const& results);

//! 0 pass, 2 statistical failure.
int exit_code(RunReport const& report);

void print_verdicts(std::ostream& os, std::vector<Verdict> const& verdicts);
}  // namespace zrp
