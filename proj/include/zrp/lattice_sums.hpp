//! \file zrp/lattice_sums.hpp
//! Convergent power sums over Z^d used for kernel masses and covariances.
#pragma once

namespace zrp::lattice
{
//! Riemann zeta for real s != 1.
double riemann_zeta(double s);

//! Hurwitz zeta(s, q) = sum_{k>=0} (k+q)^{-s}, s > 1, q > 0 (Euler-Maclaurin).
double hurwitz_zeta(double s, double q);

//! Dirichlet beta function, s > 0.
double dirichlet_beta(double s);

//! sum over Z^2 \ {0} of |y|^{-2s} as 4 zeta(s) beta(s); s > 1.
double square_lattice_sum(double s);

//! Same sum by the Chowla-Selberg Bessel expansion.
double square_lattice_sum_bessel(double s);

/*!
 * sum over Z^d \ {0} of |y|^{-2s} from the theta-function (Ewald) splitting;
 * exponentially convergent for any d, requires s > d/2.
 */
double epstein_theta(int d, double s);

//! sum over Z^d \ {0} of |y|^{-p}, p > d, using the best available route.
double power_sum(int d, double p);
}  // namespace zrp::lattice
