//! \file zrp/observable.hpp
//! Local observables V with their density profile derivative.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "zrp/equilibrium.hpp"
#include "zrp/model.hpp"

namespace zrp
{
enum class ObservableKind
{
    occupation,     //!< eta(0) - gamma
    rate_centered,  //!< c(eta(0)) - beta
    window_custom,  //!< tabulated V(window) minus its equilibrium mean
};

std::string to_string(ObservableKind kind);
ObservableKind observable_kind_from_string(std::string const& name);

/*!
 * Local function of the occupancies within Euclidean radius M of the origin.
 *
 * Window sites are listed in row-major order of their minimal-image offsets.
 * Custom observables are explicit tables indexed by the window occupancies in
 * base (cap + 1); a run that sees an occupancy above cap is rejected.
 */
class ObservableSpec
{
  public:
    using TableFn = std::function<double(std::span<std::int32_t const>)>;

    static ObservableSpec occupation();
    static ObservableSpec rate_centered();

    //! Tabulate fn over all window tuples with entries <= cap and center it
    //! under the product measure of `profile`.
    static ObservableSpec window_custom(int d,
                                        double radius,
                                        int cap,
                                        double poly_degree,
                                        TableFn const& fn,
                                        EquilibriumProfile const& profile);

    static ObservableSpec window_custom_table(int d,
                                              double radius,
                                              int cap,
                                              double poly_degree,
                                              std::vector<double> table,
                                              EquilibriumProfile const& profile);

    ObservableKind kind() const { return kind_; }
    double window_radius() const { return radius_; }
    double poly_degree() const { return degree_; }
    int cap() const { return cap_; }

    //! Offsets (dimension d each) of the window sites.
    std::vector<std::vector<std::int64_t>> const& window_offsets() const
    {
        return offsets_;
    }
    std::size_t window_size() const { return offsets_.size(); }

    //! V-bar(gamma) after centering; zero by construction.
    double vbar() const { return 0.0; }

    //! Equilibrium mean of the uncentered table (custom kind only).
    double raw_mean() const { return raw_mean_; }

    //! Raw (uncentered) table entry for a window tuple.
    double raw_value(std::span<std::int32_t const> window) const;

    //! Equilibrium mean of the raw table under an arbitrary profile.
    double raw_mean_under(EquilibriumProfile const& profile) const;

  private:
    ObservableSpec() = default;

    ObservableKind kind_ = ObservableKind::occupation;
    double radius_ = 0;
    double degree_ = 1;
    int cap_ = 0;
    std::vector<std::vector<std::int64_t>> offsets_;
    std::vector<double> table_;
    double raw_mean_ = 0;
};

//! Centered V for the given window occupancies.
double evaluate_observable(ObservableSpec const& obs,
                           std::span<std::int32_t const> window,
                           EquilibriumProfile const& profile);

//! d/d gamma of the equilibrium mean of V at the profile's density.
double vbar_prime_of(ObservableSpec const& obs,
                     EquilibriumProfile const& profile);

//! Offsets of all lattice points with ||x||_2 <= radius, row-major order.
std::vector<std::vector<std::int64_t>> window_offsets(int d, double radius);
}  // namespace zrp
