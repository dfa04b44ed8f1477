//! \file weighted_index.cpp
#include "zrp/weighted_index.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "zrp/error.hpp"

namespace zrp
{
WeightedIndex::WeightedIndex(std::size_t n) : n_(n), leaf_(n, 0.0)
{
    top_bit_ = n == 0 ? 0 : std::bit_floor(n);
    tree_.assign(std::max<std::size_t>(2 * top_bit_, n + 1),
                 std::numeric_limits<double>::infinity());
    std::fill(tree_.begin(), tree_.begin() + n + 1, 0.0);
}

WeightedIndex::WeightedIndex(std::span<double const> weights)
    : WeightedIndex(weights.size())
{
    leaf_.assign(weights.begin(), weights.end());
    rebuild();
}

double WeightedIndex::prefix(std::size_t i) const
{
    double s = 0;
    for (std::size_t j = i + 1; j > 0; j -= j & (~j + 1))
        s += tree_[j];
    return s;
}

double WeightedIndex::recompute_total() const
{
    double s = 0;
    for (double w : leaf_)
        s += w;
    return s;
}

void WeightedIndex::rebuild()
{
    std::size_t const n = n_;
    for (std::size_t j = 1; j <= n; ++j)
        tree_[j] = leaf_[j - 1];
    for (std::size_t j = 1; j <= n; ++j)
    {
        std::size_t const parent = j + (j & (~j + 1));
        if (parent <= n)
            tree_[parent] += tree_[j];
    }
    total_ = recompute_total();
}
}  // namespace zrp
