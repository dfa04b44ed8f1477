//! \file recorder.cpp
#include "zrp/recorder.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "zrp/error.hpp"

namespace zrp
{
PathAccumulator::PathAccumulator(std::vector<double> grid, double t0)
    : grid_(std::move(grid)), time_(t0)
{
    if (!std::is_sorted(grid_.begin(), grid_.end())
        || std::adjacent_find(grid_.begin(), grid_.end()) != grid_.end())
        throw ValidationError("functional grid must be strictly increasing");
    if (!grid_.empty() && grid_.front() < t0)
        throw ValidationError("functional grid starts before the run");
    values_.reserve(grid_.size());
    flush_grid(0.0, t0);
}

void PathAccumulator::add(double x)
{
    double const t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

void PathAccumulator::flush_grid(double v, double t_end)
{
    while (next_ < grid_.size() && grid_[next_] <= t_end)
    {
        add(v * (grid_[next_] - time_));
        time_ = grid_[next_];
        values_.push_back(value());
        ++next_;
    }
}

void PathAccumulator::integrate(double v, double t_begin, double t_end)
{
    if (t_end < t_begin)
        throw ValidationError("negative integration interval");
    time_ = t_begin;
    flush_grid(v, t_end);
    add(v * (t_end - time_));
    time_ = t_end;
}

void PathAccumulator::accumulate(double v, double dt)
{
    if (dt < 0)
        throw ValidationError("accumulate requires dt >= 0");
    integrate(v, time_, time_ + dt);
}

FunctionalPath PathAccumulator::path() const
{
    FunctionalPath p;
    p.grid.assign(grid_.begin(), grid_.begin() + values_.size());
    p.values = values_;
    p.exact = true;
    return p;
}

//---------------------------------------------------------------------------//
FunctionalRecorder::FunctionalRecorder(ObservableSpec obs,
                                       EquilibriumProfile profile,
                                       TorusGeometry const& geometry,
                                       std::vector<double> grid,
                                       RecorderOptions options)
    : obs_(std::move(obs))
    , profile_(std::move(profile))
    , options_(options)
    , acc_(std::move(grid))
{
    if (options_.centering == Centering::realized_density
        && obs_.kind() != ObservableKind::occupation)
        throw ValidationError(
            "realized-density centering is defined for the occupation "
            "observable only");
    for (auto const& off : obs_.window_offsets())
    {
        if (static_cast<int>(off.size()) != geometry.dim())
            throw ValidationError("observable window dimension mismatch");
        window_sites_.push_back(geometry.site(off));
    }
    window_buf_.resize(window_sites_.size());
}

bool FunctionalRecorder::touches(std::size_t site) const
{
    return std::find(window_sites_.begin(), window_sites_.end(), site)
           != window_sites_.end();
}

double FunctionalRecorder::evaluate(Configuration const& config)
{
    if (!shift_ready_)
    {
        if (options_.centering == Centering::realized_density)
            shift_ = profile_.gamma
                     - static_cast<double>(config.total_particles())
                           / static_cast<double>(config.num_sites());
        shift_ready_ = true;
    }
    for (std::size_t i = 0; i < window_sites_.size(); ++i)
        window_buf_[i] = config[window_sites_[i]];
    ++evaluations_;
    return evaluate_observable(obs_, window_buf_, profile_) + shift_;
}

void FunctionalRecorder::hold(Configuration const& config,
                              double t_begin,
                              double dt)
{
    if (dirty_)
    {
        double const v = evaluate(config);
        dirty_ = false;
        if (!started_)
        {
            started_ = true;
            seg_start_ = t_begin;
            value_ = v;
        }
        else if (v != value_)
        {
            // holding times are summed with compensation, so t_begin can sit
            // an ulp below the previous interval end
            double const cut = std::max(t_begin, seg_start_);
            acc_.integrate(value_, seg_start_, cut);
            seg_start_ = cut;
            value_ = v;
        }
    }
    double const end = std::max(t_begin + dt, seg_start_);
    if (end >= acc_.next_grid_time())
    {
        acc_.integrate(value_, seg_start_, end);
        seg_start_ = end;
    }
}

void FunctionalRecorder::jumped(Configuration const&, Event const& event)
{
    if (options_.full_reevaluation || touches(event.source)
        || touches(event.destination))
        dirty_ = true;
}

//---------------------------------------------------------------------------//
SnapshotSampler::SnapshotSampler(std::vector<std::size_t> sites,
                                 double dt,
                                 double t_first,
                                 AutocovAccumulator& sink,
                                 Centering centering,
                                 double gamma)
    : sites_(std::move(sites))
    , dt_(dt)
    , t_first_(t_first)
    , sink_(&sink)
    , centering_(centering)
    , gamma_(gamma)
    , buf_(sites_.size())
{
    if (!(dt > 0))
        throw ValidationError("snapshot spacing must be > 0");
}

void SnapshotSampler::hold(Configuration const& config,
                           double t_begin,
                           double dt)
{
    double const end = t_begin + dt;
    double m = gamma_;
    if (centering_ == Centering::realized_density)
        m = static_cast<double>(config.total_particles())
            / static_cast<double>(config.num_sites());
    for (;;)
    {
        double const t = t_first_ + dt_ * static_cast<double>(taken_);
        if (t >= end)
            break;
        if (t >= t_begin)
        {
            for (std::size_t i = 0; i < sites_.size(); ++i)
                buf_[i] = config[sites_[i]] - m;
            sink_->push(buf_);
        }
        ++taken_;
    }
}

//---------------------------------------------------------------------------//
FunctionalPath record_functional(ModelSpec const& spec,
                                 EquilibriumProfile const& profile,
                                 ObservableSpec const& obs,
                                 std::vector<double> grid,
                                 Rng& rng,
                                 RecorderOptions options,
                                 DisplacementSampler const* sampler)
{
    std::unique_ptr<DisplacementSampler> owned;
    if (!sampler)
    {
        owned = std::make_unique<DisplacementSampler>(spec);
        sampler = owned.get();
    }
    if (grid.empty())
        return {};
    double const horizon = grid.back();
    auto config = sample_configuration(rng, spec, profile,
                                       SourceSelection::composition);
    FunctionalRecorder rec(obs, profile, config.geometry(), std::move(grid),
                           options);
    Observer* observers[] = {&rec};
    advance_until(config, *sampler, horizon, observers, rng);
    return rec.path();
}

void write_paths_csv(std::ostream& os, std::vector<FunctionalPath> const& paths)
{
    os << "replica,t,A\n";
    os << std::setprecision(17);
    for (std::size_t r = 0; r < paths.size(); ++r)
        for (std::size_t j = 0; j < paths[r].values.size(); ++j)
            os << r << ',' << paths[r].grid[j] << ',' << paths[r].values[j]
               << '\n';
}
}  // namespace zrp
