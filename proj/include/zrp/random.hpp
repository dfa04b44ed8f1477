//! \file zrp/random.hpp
#pragma once

#include <cstdint>
#include <random>

namespace zrp
{
//! SplitMix64 finalizer: a bijective 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x) noexcept;

/*!
 * Derive an independent seed from (master, index, stream) by counter-mode
 * hashing. The result depends only on the three inputs, never on the order
 * in which replicas are started.
 */
std::uint64_t derive_seed(std::uint64_t master,
                          std::uint64_t index,
                          std::uint64_t stream = 0) noexcept;

//! Exclusive random stream owned by one worker.
class Rng
{
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    //! Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    //! Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    //! Exponential waiting time with the given rate.
    double exponential(double rate);

    //! Standard normal draw (Marsaglia polar method).
    double normal();

  private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};
}  // namespace zrp
