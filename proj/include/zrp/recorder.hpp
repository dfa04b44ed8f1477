//! \file zrp/recorder.hpp
//! Exact additive functionals A(t) = int_0^t V(eta_s) ds along trajectories.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "zrp/engine.hpp"
#include "zrp/observable.hpp"
#include "zrp/stats.hpp"

namespace zrp
{
//! A(t_j) on an increasing time grid.
struct FunctionalPath
{
    std::vector<double> grid;
    std::vector<double> values;
    bool exact = true;
};

/*!
 * Integral of a step function, evaluated exactly at grid points.
 *
 * Intervals that straddle a grid point are split there, so A(t_j) carries no
 * quadrature error; sums use Neumaier compensation.
 */
class PathAccumulator
{
  public:
    explicit PathAccumulator(std::vector<double> grid, double t0 = 0.0);

    //! Add v over [time(), time() + dt).
    void accumulate(double v, double dt);

    //! Add v over [t_begin, t_end); t_begin must equal time().
    void integrate(double v, double t_begin, double t_end);

    double time() const { return time_; }
    //! Next grid time not yet recorded, or +inf.
    double next_grid_time() const
    {
        return next_ < grid_.size() ? grid_[next_]
                                    : std::numeric_limits<double>::infinity();
    }
    double value() const { return sum_ + comp_; }
    bool complete() const { return next_ == grid_.size(); }

    FunctionalPath path() const;

  private:
    void add(double x);
    void flush_grid(double v, double t_end);

    std::vector<double> grid_;
    std::vector<double> values_;
    std::size_t next_ = 0;
    double time_ = 0;
    double sum_ = 0;
    double comp_ = 0;
};

//! How the occupation observable is centered on a finite torus.
enum class Centering
{
    ensemble,          //!< subtract gamma (the product-measure mean)
    realized_density,  //!< subtract N_particles / L^d of the sampled torus
};

struct RecorderOptions
{
    Centering centering = Centering::ensemble;
    //! Re-evaluate V after every event instead of only window-touching ones.
    bool full_reevaluation = false;
};

//! Observer accumulating one observable along a trajectory.
class FunctionalRecorder final : public Observer
{
  public:
    FunctionalRecorder(ObservableSpec obs,
                       EquilibriumProfile profile,
                       TorusGeometry const& geometry,
                       std::vector<double> grid,
                       RecorderOptions options = {});

    void hold(Configuration const& config, double t_begin, double dt) override;
    void jumped(Configuration const& config, Event const& event) override;

    FunctionalPath path() const { return acc_.path(); }
    PathAccumulator const& accumulator() const { return acc_; }
    std::uint64_t evaluations() const { return evaluations_; }

    //! Current centered value of V for a configuration.
    double evaluate(Configuration const& config);

  private:
    bool touches(std::size_t site) const;

    ObservableSpec obs_;
    EquilibriumProfile profile_;
    RecorderOptions options_;
    std::vector<std::size_t> window_sites_;
    std::vector<std::int32_t> window_buf_;
    PathAccumulator acc_;
    // Integration of value_ from seg_start_ is deferred until V changes or
    // a grid time is crossed, so both evaluation modes cut identical pieces.
    double value_ = 0;
    double seg_start_ = 0;
    bool started_ = false;
    double shift_ = 0;
    bool dirty_ = true;
    bool shift_ready_ = false;
    std::uint64_t evaluations_ = 0;
};

/*!
 * Observer pushing eta(x) - m for the chosen sites at times t_first + k dt
 * into an autocovariance accumulator. m is gamma, or the realized density
 * of the torus.
 */
class SnapshotSampler final : public Observer
{
  public:
    SnapshotSampler(std::vector<std::size_t> sites,
                    double dt,
                    double t_first,
                    AutocovAccumulator& sink,
                    Centering centering,
                    double gamma);
    void hold(Configuration const& config, double t_begin, double dt) override;
    std::size_t taken() const { return taken_; }

  private:
    std::vector<std::size_t> sites_;
    double dt_;
    double t_first_;
    AutocovAccumulator* sink_;
    Centering centering_;
    double gamma_;
    std::vector<double> buf_;
    std::size_t taken_ = 0;
};

/*!
 * Sample an equilibrium start, run the dynamics to the last grid time and
 * return A at every grid point.
 */
FunctionalPath record_functional(ModelSpec const& spec,
                                 EquilibriumProfile const& profile,
                                 ObservableSpec const& obs,
                                 std::vector<double> grid,
                                 Rng& rng,
                                 RecorderOptions options = {},
                                 DisplacementSampler const* sampler = nullptr);

//! CSV with header "replica,t,A"; rows in replica then grid order.
void write_paths_csv(std::ostream& os,
                     std::vector<FunctionalPath> const& paths);
}  // namespace zrp
