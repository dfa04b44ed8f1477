//! \file zrp/weighted_index.hpp
#pragma once

#include <bit>
#include <cstddef>
#include <span>
#include <vector>

namespace zrp
{
/*!
 * Binary indexed (Fenwick) tree over nonnegative weights.
 *
 * Supports O(log n) point updates and O(log n) inverse-prefix search, which
 * is all an event-driven simulation needs to pick a site proportionally to
 * its rate.
 */
class WeightedIndex
{
  public:
    WeightedIndex() = default;
    explicit WeightedIndex(std::size_t n);
    explicit WeightedIndex(std::span<double const> weights);

    std::size_t size() const { return leaf_.size(); }
    double weight(std::size_t i) const { return leaf_[i]; }
    std::span<double const> weights() const { return leaf_; }

    //! Running total maintained by updates.
    double total() const { return total_; }

    void set(std::size_t i, double w)
    {
        double const delta = w - leaf_[i];
        if (delta == 0.0)
            return;
        leaf_[i] = w;
        total_ += delta;
        for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1))
            tree_[j] += delta;
    }

    /*!
     * Smallest index i with w_0 + ... + w_i > target. Returns size() if
     * target >= sum of all weights (possible only through rounding).
     */
    std::size_t find(double target) const
    {
        // Nodes past n hold +inf, so the descent needs no bounds branch.
        std::size_t pos = 0;
        for (std::size_t step = top_bit_; step != 0; step >>= 1)
        {
            double const v = tree_[pos + step];
            bool const go = v <= target;
            pos += go ? step : 0;
            target -= go ? v : 0.0;
        }
        return pos;
    }

    //! Sum of w_0..w_i from the tree.
    double prefix(std::size_t i) const;

    //! Leaf sum recomputed from scratch (audit).
    double recompute_total() const;

    //! Rebuild interior nodes and the running total from the leaves.
    void rebuild();

  private:
    std::vector<double> tree_;  // 1-based, padded to 2 * top_bit_
    std::size_t n_ = 0;
    std::vector<double> leaf_;
    std::size_t top_bit_ = 0;
    double total_ = 0;
};
}  // namespace zrp
