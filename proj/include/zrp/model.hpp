//! \file zrp/model.hpp
//! Lattice geometry, heavy-tailed jump kernel and rate families.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zrp
{
//---------------------------------------------------------------------------//
enum class RateKind
{
    linear,  //!< c(k) = a k
    affine,  //!< c(k) = a k + b 1{k >= 1}
};

std::string to_string(RateKind kind);
RateKind rate_kind_from_string(std::string const& name);

/*!
 * Closed-form jump-rate function c(k) with c(0) = 0.
 *
 * Both families have increments bounded away from zero and infinity whenever
 * the constructor arguments are admissible, which is what makes the product
 * measures below normalizable.
 */
class RateFamily
{
  public:
    static RateFamily linear(double a);
    static RateFamily affine(double a, double b);

    RateKind kind() const { return kind_; }
    double slope() const { return a_; }
    double offset() const { return b_; }

    double operator()(std::int64_t k) const
    {
        if (k <= 0)
            return 0.0;
        return kind_ == RateKind::linear
                   ? a_ * static_cast<double>(k)
                   : a_ * static_cast<double>(k) + b_;
    }

    //! Smallest and largest increment c(k+1) - c(k) over all k.
    double min_increment() const;
    double max_increment() const;

    bool operator==(RateFamily const&) const = default;

  private:
    RateFamily(RateKind kind, double a, double b) : kind_(kind), a_(a), b_(b)
    {
    }

    RateKind kind_;
    double a_;
    double b_;
};

//! c(k) for the given family.
inline double rate(std::int64_t k, RateFamily const& family)
{
    return family(k);
}

struct RateValidation
{
    bool accepted = false;
    double inf_increment = 0;
    double sup_increment = 0;
    std::int64_t offending_k = -1;  //!< first k with c(k+1) - c(k) <= 0
    std::string message;
};

//! Check every increment c(k+1) - c(k) for 0 <= k < k_max.
RateValidation validate_rate_family(RateFamily const& family,
                                    std::int64_t k_max);

//---------------------------------------------------------------------------//
//! Full dynamics definition: dimension, tail exponent, torus, rates, density.
struct ModelSpec
{
    int d = 1;
    double alpha = 1.5;
    std::int64_t L = 64;
    RateFamily rate_family = RateFamily::linear(1.0);
    double gamma = 1.0;

    //! Throws ValidationError listing the first violated invariant.
    void validate(std::int64_t k_max = 1000) const;
};

//---------------------------------------------------------------------------//
/*!
 * Periodic box {0..L-1}^d with row-major site numbering (last axis fastest).
 *
 * Displacements are always reduced to the minimal image, with each coordinate
 * in (-L/2, L/2].
 */
class TorusGeometry
{
  public:
    TorusGeometry(int d, std::int64_t L);

    int dim() const { return d_; }
    std::int64_t side() const { return L_; }
    std::size_t num_sites() const { return n_; }

    //! Map any integer to its minimal-image representative.
    std::int64_t minimal_image(std::int64_t dx) const;

    std::vector<std::int64_t> coords(std::size_t site) const;
    std::size_t site(std::span<std::int64_t const> coords) const;

    //! Site reached from `from` by displacement dx (any representative).
    std::size_t translate(std::size_t from,
                          std::span<std::int64_t const> dx) const;

    //! Minimal-image displacement from a to b.
    std::vector<std::int64_t> displacement(std::size_t a, std::size_t b) const;

    //! Squared Euclidean norm of the minimal-image displacement a -> b.
    double distance_squared(std::size_t a, std::size_t b) const;

  private:
    int d_;
    std::int64_t L_;
    std::size_t n_;
};

//---------------------------------------------------------------------------//
//! ||dx||_2^{-(d+alpha)} for a nonzero displacement; 0 for dx = 0.
double kernel_weight(std::span<std::int64_t const> dx, ModelSpec const& spec);

//! Same as kernel_weight but from a precomputed squared norm.
double kernel_weight_r2(double r2, int d, double alpha);

//! Per-particle total jump intensity on the torus (sum over minimal images).
double kernel_mass(ModelSpec const& spec);

//! Sum of ||y||^{-(d+alpha)} over the infinite lattice Z^d \ {0}.
double kernel_mass_infinite(int d, double alpha);
}  // namespace zrp
