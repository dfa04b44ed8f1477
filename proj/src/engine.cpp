//! \file engine.cpp
#include "zrp/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "zrp/error.hpp"

namespace zrp
{
namespace
{
// Interior tree nodes are refreshed from the leaves this often so that
// rounding in the incremental updates cannot accumulate.
constexpr std::uint64_t rebuild_interval = std::uint64_t{1} << 24;
}  // namespace

Configuration::Configuration(TorusGeometry geometry,
                             RateFamily family,
                             std::vector<std::int32_t> occupancy,
                             double sim_time,
                             SourceSelection selection)
    : geo_(geometry)
    , family_(family)
    , occ_(std::move(occupancy))
    , time_(sim_time)
    , selection_(selection)
{
    if (occ_.size() != geo_.num_sites())
        throw ValidationError("occupancy size does not match the torus");
    std::vector<double> w(occ_.size());
    for (std::size_t i = 0; i < occ_.size(); ++i)
    {
        if (occ_[i] < 0)
            throw ValidationError("occupancy must be nonnegative");
        total_particles_ += occ_[i];
        w[i] = family_(occ_[i]);
    }
    if (selection_ == SourceSelection::fenwick)
    {
        rates_ = WeightedIndex(w);
        return;
    }
    if (family_.offset() < 0)
        throw ValidationError("composition sampling needs b >= 0");
    head_.assign(occ_.size(), -1);
    occupied_pos_.assign(occ_.size(), -1);
    particle_site_.reserve(static_cast<std::size_t>(total_particles_));
    next_.reserve(static_cast<std::size_t>(total_particles_));
    prev_.reserve(static_cast<std::size_t>(total_particles_));
    for (std::size_t x = 0; x < occ_.size(); ++x)
    {
        if (occ_[x] > 0)
        {
            occupied_pos_[x] = static_cast<std::int64_t>(occupied_.size());
            occupied_.push_back(static_cast<std::uint32_t>(x));
        }
        for (std::int32_t k = 0; k < occ_[x]; ++k)
        {
            auto const p = static_cast<std::int64_t>(particle_site_.size());
            particle_site_.push_back(static_cast<std::uint32_t>(x));
            prev_.push_back(-1);
            next_.push_back(head_[x]);
            if (head_[x] >= 0)
                prev_[head_[x]] = p;
            head_[x] = p;
        }
    }
}

std::size_t Configuration::draw_source(Rng& rng) const
{
    if (selection_ == SourceSelection::fenwick)
    {
        for (;;)
        {
            std::size_t const s = rates_.find(rng.uniform() * rates_.total());
            // Rounding can push the search past the end or onto an empty
            // site; redrawing keeps the conditional law exact.
            if (s < rates_.size() && rates_.weight(s) > 0.0)
                return s;
        }
    }
    double const a = family_.slope();
    double const part = a * static_cast<double>(total_particles_);
    double const u = rng.uniform() * rate_sum();
    if (u < part || occupied_.empty())
    {
        auto p = static_cast<std::size_t>(u / a);
        if (p >= particle_site_.size())
            p = particle_site_.size() - 1;
        return particle_site_[p];
    }
    auto m = static_cast<std::size_t>((u - part) / family_.offset());
    if (m >= occupied_.size())
        m = occupied_.size() - 1;
    return occupied_[m];
}

void Configuration::advance_time(double dt)
{
    double const y = dt - time_comp_;
    double const t = time_ + y;
    time_comp_ = (t - time_) - y;
    time_ = t;
}

void Configuration::set_time(double t)
{
    time_ = t;
    time_comp_ = 0;
}

void Configuration::move_particle(std::size_t from, std::size_t to)
{
    if (occ_[from] <= 0) [[unlikely]]
        throw ValidationError("move_particle: source site is empty");
    auto& a = occ_[from];
    auto& b = occ_[to];
    --a;
    ++b;
    if (selection_ == SourceSelection::fenwick)
    {
        rates_.set(from, family_(a));
        rates_.set(to, family_(b));
        if (++updates_ % rebuild_interval == 0)
            rates_.rebuild();
        return;
    }
    // Move the head particle of `from` to the front of `to`.
    std::int64_t const p = head_[from];
    head_[from] = next_[p];
    if (next_[p] >= 0)
        prev_[next_[p]] = -1;
    next_[p] = head_[to];
    prev_[p] = -1;
    if (head_[to] >= 0)
        prev_[head_[to]] = p;
    head_[to] = p;
    particle_site_[p] = static_cast<std::uint32_t>(to);
    if (a == 0)
    {
        auto const i = occupied_pos_[from];
        auto const last = occupied_.back();
        occupied_[i] = last;
        occupied_pos_[last] = i;
        occupied_.pop_back();
        occupied_pos_[from] = -1;
    }
    if (b == 1)
    {
        occupied_pos_[to] = static_cast<std::int64_t>(occupied_.size());
        occupied_.push_back(static_cast<std::uint32_t>(to));
    }
}

double Configuration::recompute_rate_sum() const
{
    double s = 0;
    for (auto k : occ_)
        s += family_(k);
    return s;
}

bool Configuration::audit(double rel_tol) const
{
    std::int64_t n = 0;
    bool const fen = selection_ == SourceSelection::fenwick;
    for (std::size_t i = 0; i < occ_.size(); ++i)
    {
        if (occ_[i] < 0 || (fen && rates_.weight(i) != family_(occ_[i])))
            return false;
        n += occ_[i];
    }
    if (n != total_particles_)
        return false;
    double const exact = recompute_rate_sum();
    double const scale = std::max(std::abs(exact), 1e-300);
    if (!fen)
    {
        std::size_t occupied = 0;
        for (std::size_t x = 0; x < occ_.size(); ++x)
        {
            std::int32_t count = 0;
            for (auto p = head_[x]; p >= 0; p = next_[p])
            {
                if (particle_site_[p] != x)
                    return false;
                ++count;
            }
            if (count != occ_[x])
                return false;
            if (occ_[x] > 0)
            {
                ++occupied;
                auto const i = occupied_pos_[x];
                if (i < 0 || occupied_[i] != x)
                    return false;
            }
        }
        return occupied == occupied_.size()
               && std::abs(rate_sum() - exact) <= rel_tol * scale;
    }
    return std::abs(rates_.total() - exact) <= rel_tol * scale
           && std::abs(rates_.prefix(occ_.size() - 1) - exact)
                  <= rel_tol * scale;
}

Configuration sample_configuration(Rng& rng,
                                   ModelSpec const& spec,
                                   EquilibriumProfile const& profile,
                                   SourceSelection selection)
{
    TorusGeometry geo(spec.d, spec.L);
    std::vector<std::int32_t> occ(geo.num_sites());
    for (auto& k : occ)
        k = static_cast<std::int32_t>(sample_marginal(rng, profile));
    return Configuration(geo, spec.rate_family, std::move(occ), 0.0,
                         selection);
}

//---------------------------------------------------------------------------//
double total_rate(Configuration const& config,
                  DisplacementSampler const& sampler)
{
    return sampler.mass() * config.rate_sum();
}

namespace
{
// Source, displacement and destination for one event (time not touched).
Event draw_event(Configuration const& config,
                 DisplacementSampler const& sampler,
                 Rng& rng)
{
    Event ev;
    ev.source = config.draw_source(rng);
    ev.displacement = sampler.sample(rng);
    ev.destination = sampler.destination(ev.source, ev.displacement);
    return ev;
}
}  // namespace

Event step(Configuration& config, DisplacementSampler const& sampler, Rng& rng)
{
    double const rate = total_rate(config, sampler);
    if (!(rate > 0.0))
        throw StallError("total rate is zero: the configuration is absorbing");
    double const dt = rng.exponential(rate);
    Event ev = draw_event(config, sampler, rng);
    ev.time_increment = dt;
    config.advance_time(dt);
    config.move_particle(ev.source, ev.destination);
    return ev;
}

RunSummary advance_until(Configuration& config,
                         DisplacementSampler const& sampler,
                         double t_end,
                         std::span<Observer* const> observers,
                         Rng& rng)
{
    if (t_end < config.sim_time())
        throw ValidationError("advance_until: t_end lies in the past");
    RunSummary summary;
    double const mass = sampler.mass();
    while (true)
    {
        double const t = config.sim_time();
        double const rate = mass * config.rate_sum();
        if (!(rate > 0.0) && t < t_end)
            throw StallError(
                "total rate is zero before t_end: the configuration is "
                "absorbing");
        double const dt = rate > 0.0 ? rng.exponential(rate) : 0.0;
        if (!(rate > 0.0) || t + dt > t_end)
        {
            for (auto* obs : observers)
                obs->hold(config, t, t_end - t);
            config.set_time(t_end);
            break;
        }
        for (auto* obs : observers)
            obs->hold(config, t, dt);
        Event ev = draw_event(config, sampler, rng);
        ev.time_increment = dt;
        config.advance_time(dt);
        config.move_particle(ev.source, ev.destination);
        ++summary.events;
        for (auto* obs : observers)
            obs->jumped(config, ev);
    }
    summary.final_time = config.sim_time();
    return summary;
}

//---------------------------------------------------------------------------//
namespace
{
template<class T>
void put_le(std::ostream& os, T value)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<char const*>(buf), sizeof(T));
}

template<class T>
T get_le(std::istream& is)
{
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw ParseError("checkpoint truncated");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(buf, buf + sizeof(T));
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}
}  // namespace

void write_checkpoint(std::ostream& os, Configuration const& config)
{
    auto const& geo = config.geometry();
    put_le<std::uint8_t>(os, checkpoint_version);
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(geo.dim()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(geo.side()));
    put_le<double>(os, config.sim_time());
    put_le<std::uint64_t>(os, config.num_sites());
    for (auto k : config.occupancy())
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(k));
}

Configuration read_checkpoint(std::istream& is, RateFamily const& family)
{
    auto const version = get_le<std::uint8_t>(is);
    if (version != checkpoint_version)
        throw ParseError("unsupported checkpoint version "
                         + std::to_string(version));
    int const d = get_le<std::uint8_t>(is);
    auto const L = get_le<std::uint32_t>(is);
    double const t = get_le<double>(is);
    auto const n = get_le<std::uint64_t>(is);
    TorusGeometry geo(d, L);
    if (n != geo.num_sites())
        throw ParseError("checkpoint site count does not match d and L");
    std::vector<std::int32_t> occ(n);
    for (auto& k : occ)
        k = static_cast<std::int32_t>(get_le<std::uint32_t>(is));
    return Configuration(geo, family, std::move(occ), t);
}
}  // namespace zrp
