//! \file displacement_sampler.cpp
#include "zrp/displacement_sampler.hpp"

#include <algorithm>

namespace zrp
{
DisplacementSampler::DisplacementSampler(ModelSpec const& spec)
    : geo_(spec.d, spec.L), d_(spec.d), n_(geo_.num_sites())
{
    weight_.assign(n_, 0.0);
    for (std::size_t j = 1; j < n_; ++j)
        weight_[j] = kernel_weight_r2(geo_.distance_squared(0, j), spec.d,
                                      spec.alpha);
    std::vector<double> sorted(weight_.begin(), weight_.end());
    std::sort(sorted.begin(), sorted.end());
    for (double w : sorted)
        mass_ += w;

    // Vose's alias construction.
    std::size_t const m = n_;
    prob_.assign(m, 0.0);
    alias_.assign(m, 0);
    std::vector<double> scaled(m);
    std::vector<std::uint32_t> small, large;
    for (std::size_t j = 0; j < m; ++j)
    {
        scaled[j] = weight_[j] * static_cast<double>(m) / mass_;
        (scaled[j] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(j));
    }
    while (!small.empty() && !large.empty())
    {
        auto const s = small.back();
        small.pop_back();
        auto const l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0)
        {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (auto l : large)
    {
        prob_[l] = 1.0;
        alias_[l] = l;
    }
    for (auto s : small)
    {
        // Leftovers from rounding: keep them only if they carry weight.
        prob_[s] = weight_[s] > 0 ? 1.0 : 0.0;
        alias_[s] = weight_[s] > 0 ? s : alias_[s];
    }
    // Index 0 (no displacement) must never be returned.
    prob_[0] = 0.0;
    if (alias_[0] == 0)
        alias_[0] = 1;
}

std::vector<std::int64_t> DisplacementSampler::displacement(std::size_t j) const
{
    return geo_.displacement(0, j);
}

std::size_t
DisplacementSampler::destination_nd(std::size_t source, std::size_t j) const
{
    auto const L = static_cast<std::size_t>(geo_.side());
    std::size_t result = 0;
    std::size_t stride = 1;
    for (int axis = 0; axis < d_; ++axis)
    {
        std::size_t const a = source % L;
        std::size_t const b = j % L;
        source /= L;
        j /= L;
        std::size_t c = a + b;
        if (c >= L)
            c -= L;
        result += c * stride;
        stride *= L;
    }
    return result;
}
}  // namespace zrp
