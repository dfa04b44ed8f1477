//! \file zrp/quadrature.hpp
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace zrp
{
//! n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

//! Cached rule; safe to call from several threads.
GaussLegendreRule const& gauss_legendre(std::size_t n);

/*!
 * Damped cosine transforms
 *   F(x) = (1/pi) int_0^{k_max} exp(-t psi(k)) cos(k x) dk
 * for many x at once, where psi >= 0 is nondecreasing on [0, k_limit].
 *
 * The upper limit is k_limit, or earlier where t psi exceeds the damping
 * cutoff. Panels are graded geometrically toward k = 0 (where psi may have
 * a |k|^alpha cusp) and subdivided to resolve cos(k x); node counts double
 * until every output changes by less than tol.
 */
std::vector<double> damped_cosine_transform(
    std::function<double(double)> const& psi,
    double t,
    double k_limit,
    std::span<double const> xs,
    double tol = 1e-12);
}  // namespace zrp
