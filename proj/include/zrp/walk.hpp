//! \file zrp/walk.hpp
//! Single long-range random walk: lattice symbol, transition probabilities,
//! space-time scaling functions.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace zrp
{
/*!
 * phi(k) = sum_{y != 0} (1 - cos(k.y)) |y|^{-(d+alpha)} on Z^d.
 *
 * In d = 1 this is evaluated from the small-k expansion of the periodic zeta
 * function, which converges on the whole zone |k| <= pi (with the logarithmic
 * limit form at integer alpha). In d >= 2 the sum runs over the ball of
 * radius R and the remainder is replaced by its continuum integral.
 */
class WalkSymbol
{
  public:
    explicit WalkSymbol(int d, double alpha, double ball_radius = 64.0);

    int dim() const { return d_; }
    double alpha() const { return alpha_; }

    double operator()(std::span<double const> k) const;
    //! d = 1 shortcut.
    double operator()(double k) const;

    //! d = 2: phi(nodes[a], nodes[b]) for all pairs, row-major.
    std::vector<double> grid_2d(std::span<double const> nodes) const;

  private:
    double eval_1d(double k) const;
    double eval_nd(std::span<double const> k) const;
    double continuum_tail(double knorm) const;
    //! continuum_tail from a log-log spline table.
    double tail(double knorm) const;

    int d_;
    double alpha_;
    // d = 1 expansion
    bool integer_alpha_ = false;
    double singular_coef_ = 0;  // |k|^alpha coefficient (non-integer alpha)
    std::vector<double> even_coefs_;  // k^{2m} coefficients, m = 0, 1, ...
    // d >= 2 ball sum
    double ball_radius_ = 0;
    double total_mass_ = 0;
    std::vector<std::vector<double>> ball_points_;
    std::vector<double> ball_weights_;
    struct TailTable;
    std::shared_ptr<TailTable const> tail_table_;
};

//! p_t(0, x) for each x (d = 1). Throws ConvergenceError with the achieved
//! error if two successive refinements do not agree to tol.
std::vector<double> transition_probabilities(WalkSymbol const& symbol,
                                             double t,
                                             std::span<std::int64_t const> xs,
                                             double tol = 1e-12);

//! p_t(0, x) for a single site of any dimension.
double transition_probability(WalkSymbol const& symbol,
                              double t,
                              std::span<std::int64_t const> x,
                              double tol = 1e-10);

//---------------------------------------------------------------------------//
//! h_alpha(s). Throws DomainError for s <= 1 when alpha = 2.
double scaling_h(double s, double alpha);
//! Lambda_{d,alpha}(N). Throws DomainError where a log argument is <= 1.
double normalizer(double N, int d, double alpha);
//! Textual rule for Lambda_{d,alpha}, e.g. "N^(3/4)".
std::string normalizer_rule(int d, double alpha);
//! Regime label such as "d=1, 1<alpha<2".
std::string regime_label(int d, double alpha);

//! sup over |x| <= window h_alpha(s) of |h^d p_{ts}(0,x) - f_t(x/h)|, d = 1.
double lclt_discrepancy(double t, double s, double alpha, double window);
}  // namespace zrp
