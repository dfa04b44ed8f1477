//! \file zrp/engine.hpp
//! Exact event-driven simulation of the long-range zero-range dynamics.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "zrp/displacement_sampler.hpp"
#include "zrp/equilibrium.hpp"
#include "zrp/model.hpp"
#include "zrp/random.hpp"
#include "zrp/weighted_index.hpp"

namespace zrp
{
//---------------------------------------------------------------------------//
//! How the source site of the next event is drawn.
enum class SourceSelection
{
    //! Inverse-prefix search in the Fenwick index of c(eta(x)).
    fenwick,
    /*!
     * For c(k) = a k + b 1{k >= 1}: a uniform particle with probability
     * aN / (aN + bM), else a uniform occupied site (M of them). Same law,
     * O(1) per event; the Fenwick index is not maintained.
     */
    composition,
};

/*!
 * Occupancy field on the torus plus the per-site rate index c(eta(x)).
 *
 * In fenwick mode the rate index leaves always equal c(eta(x)); the particle
 * count is fixed at construction and conserved by move_particle.
 */
class Configuration
{
  public:
    Configuration(TorusGeometry geometry,
                  RateFamily family,
                  std::vector<std::int32_t> occupancy,
                  double sim_time = 0.0,
                  SourceSelection selection = SourceSelection::fenwick);

    TorusGeometry const& geometry() const { return geo_; }
    RateFamily const& family() const { return family_; }

    std::size_t num_sites() const { return occ_.size(); }
    std::span<std::int32_t const> occupancy() const { return occ_; }
    std::int32_t operator[](std::size_t site) const { return occ_[site]; }
    std::int64_t total_particles() const { return total_particles_; }

    SourceSelection selection() const { return selection_; }
    //! Maintained in fenwick mode only.
    WeightedIndex const& rate_index() const { return rates_; }
    //! Cached sum over sites of c(eta(x)).
    double rate_sum() const
    {
        if (selection_ == SourceSelection::fenwick)
            return rates_.total();
        return family_.slope() * static_cast<double>(total_particles_)
               + family_.offset() * static_cast<double>(occupied_.size());
    }
    //! Source site drawn with probability c(eta(x)) / sum c.
    std::size_t draw_source(Rng& rng) const;

    double sim_time() const { return time_; }
    void advance_time(double dt);
    void set_time(double t);

    //! Apply eta -> eta^{from,to}. Requires eta(from) >= 1 and from != to.
    void move_particle(std::size_t from, std::size_t to);

    //! Sum of c(eta(x)) recomputed from the occupancy field.
    double recompute_rate_sum() const;

    //! True when the selection structures agree with the occupancy (every
    //! rate leaf equals c(eta(x)) in fenwick mode), the particle count matches
    //! and the cached rate sum agrees with a recomputation to rel_tol.
    bool audit(double rel_tol = 1e-9) const;

  private:
    TorusGeometry geo_;
    RateFamily family_;
    std::vector<std::int32_t> occ_;
    WeightedIndex rates_;
    std::int64_t total_particles_ = 0;
    double time_ = 0;
    double time_comp_ = 0;  // Kahan compensation
    std::uint64_t updates_ = 0;
    SourceSelection selection_;
    // composition mode: particle lists per site and the occupied-site set
    std::vector<std::uint32_t> particle_site_;
    std::vector<std::int64_t> head_, next_, prev_;
    std::vector<std::uint32_t> occupied_;
    std::vector<std::int64_t> occupied_pos_;
};

//! Draw an i.i.d. configuration from the product measure.
Configuration sample_configuration(
    Rng& rng,
    ModelSpec const& spec,
    EquilibriumProfile const& profile,
    SourceSelection selection = SourceSelection::fenwick);

//---------------------------------------------------------------------------//
struct Event
{
    double time_increment = 0;
    std::size_t source = 0;
    std::size_t displacement = 0;  //!< index into the DisplacementSampler
    std::size_t destination = 0;
};

//! Callback interface invoked along a trajectory.
class Observer
{
  public:
    virtual ~Observer() = default;

    //! The configuration is constant on [t_begin, t_begin + dt).
    virtual void hold(Configuration const& config, double t_begin, double dt)
        = 0;

    //! Called after an event has been applied to the configuration.
    virtual void jumped(Configuration const& config, Event const& event)
    {
        (void)config;
        (void)event;
    }
};

struct RunSummary
{
    std::uint64_t events = 0;
    double final_time = 0;
};

//! Total jump rate S * sum_x c(eta(x)).
double total_rate(Configuration const& config,
                  DisplacementSampler const& sampler);

/*!
 * Fire one event: draw the exponential waiting time, the source site
 * proportionally to c(eta(x)), and the displacement from the kernel.
 * Throws StallError when the total rate is zero.
 */
Event step(Configuration& config,
           DisplacementSampler const& sampler,
           Rng& rng);

/*!
 * Fire events until the next one would land after t_end; observers see each
 * holding interval (including the final partial one). On return
 * sim_time == t_end.
 */
RunSummary advance_until(Configuration& config,
                         DisplacementSampler const& sampler,
                         double t_end,
                         std::span<Observer* const> observers,
                         Rng& rng);

//---------------------------------------------------------------------------//
// Binary checkpoint: little-endian
//   u8 version | u8 d | u32 L | f64 sim_time | u64 n | u32 occupancy[n]
inline constexpr std::uint8_t checkpoint_version = 1;

void write_checkpoint(std::ostream& os, Configuration const& config);
Configuration read_checkpoint(std::istream& is, RateFamily const& family);
}  // namespace zrp
