//! \file zrp/displacement_sampler.hpp
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "zrp/model.hpp"
#include "zrp/random.hpp"

namespace zrp
{
/*!
 * Alias table over all nonzero minimal-image displacements of the torus,
 * weighted by the long-range kernel. Sampling costs one uniform draw.
 *
 * Displacement j (1 <= j < L^d) is the minimal image of the site with row-major
 * index j, seen from the origin; index 0 is never drawn.
 */
class DisplacementSampler
{
  public:
    explicit DisplacementSampler(ModelSpec const& spec);

    TorusGeometry const& geometry() const { return geo_; }

    //! Torus kernel mass S = sum of all weights.
    double mass() const { return mass_; }

    std::size_t num_displacements() const { return weight_.size(); }
    double weight(std::size_t j) const { return weight_[j]; }
    double probability(std::size_t j) const { return weight_[j] / mass_; }

    //! Minimal-image displacement vector for index j.
    std::vector<std::int64_t> displacement(std::size_t j) const;

    std::size_t sample(Rng& rng) const
    {
        double const u = rng.uniform() * static_cast<double>(prob_.size());
        auto const i = static_cast<std::size_t>(u);
        return (u - static_cast<double>(i)) < prob_[i] ? i : alias_[i];
    }

    //! Site reached from `source` by displacement index j.
    std::size_t destination(std::size_t source, std::size_t j) const
    {
        if (d_ == 1)
        {
            std::size_t t = source + j;
            return t >= n_ ? t - n_ : t;
        }
        return destination_nd(source, j);
    }

  private:
    std::size_t destination_nd(std::size_t source, std::size_t j) const;

    TorusGeometry geo_;
    int d_;
    std::size_t n_;
    double mass_ = 0;
    std::vector<double> weight_;  // index 0 has weight 0
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};
}  // namespace zrp
