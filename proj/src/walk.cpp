//! \file walk.cpp
#include "zrp/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "zrp/error.hpp"
#include "zrp/lattice_sums.hpp"
#include "zrp/quadrature.hpp"
#include "zrp/stable.hpp"

namespace zrp
{
namespace
{
constexpr double pi = std::numbers::pi;
constexpr int max_series_order = 60;

double sphere_area(int d)
{
    return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Gamma(d/2) (2/u)^{d/2-1} J_{d/2-1}(u): angular average of cos(k.v).
double radial_cos_average(int d, double u)
{
    if (u < 1e-8)
        return 1.0 - u * u / (2.0 * d);
    double const nu = 0.5 * d - 1.0;
    return std::tgamma(0.5 * d) * std::pow(2.0 / u, nu)
           * boost::math::cyl_bessel_j(nu, u);
}
}  // namespace

struct WalkSymbol::TailTable
{
    double k_min = 0;
    double at_k_min = 0;
    double power = 2;  // small-k exponent used below k_min
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
};

WalkSymbol::WalkSymbol(int d, double alpha, double ball_radius)
    : d_(d), alpha_(alpha)
{
    if (d < 1)
        throw ValidationError("walk dimension must be >= 1");
    if (!(alpha > 0))
        throw DomainError("walk tail exponent alpha must be > 0");

    if (d == 1)
    {
        double const s = 1.0 + alpha;
        integer_alpha_ = alpha == std::floor(alpha);
        if (!integer_alpha_)
            singular_coef_ = -2.0 * std::tgamma(1.0 - s)
                             * std::cos(0.5 * pi * alpha);
        even_coefs_.assign(max_series_order + 1, 0.0);
        for (int m = 1; m <= max_series_order; ++m)
        {
            double const arg = s - 2.0 * m;
            if (integer_alpha_ && arg == 1.0)
                continue;  // pole, replaced by the logarithmic term
            double const sign = (m % 2 == 0) ? 1.0 : -1.0;
            even_coefs_[m] = -2.0 * sign * lattice::riemann_zeta(arg)
                             / boost::math::factorial<double>(2 * m);
        }
        return;
    }

    ball_radius_ = ball_radius;
    total_mass_ = lattice::power_sum(d, d + alpha);
    auto const r = static_cast<std::int64_t>(std::floor(ball_radius));
    std::vector<std::int64_t> y(d, -r);
    double const r2max = ball_radius * ball_radius;
    for (;;)
    {
        double r2 = 0;
        for (auto v : y)
            r2 += static_cast<double>(v * v);
        if (r2 > 0 && r2 <= r2max)
        {
            ball_points_.emplace_back(y.begin(), y.end());
            ball_weights_.push_back(std::pow(r2, -0.5 * (d + alpha)));
        }
        int axis = d - 1;
        while (axis >= 0 && y[axis] == r)
            y[axis--] = -r;
        if (axis < 0)
            break;
        ++y[axis];
    }

    // The tail is smooth in log k away from 0, where it behaves like a mix of
    // k^2 and k^alpha; a log-log spline reproduces it to ~1e-8 relative.
    constexpr std::size_t points = 1024;
    double const k_min = 1e-4;
    double const s0 = std::log(k_min);
    double const step
        = (std::log(1.01 * pi * std::sqrt(static_cast<double>(d))) - s0)
          / static_cast<double>(points - 1);
    std::vector<double> values(points);
    for (std::size_t i = 0; i < points; ++i)
        values[i] = std::log(continuum_tail(std::exp(s0 + step * i)));
    double const at_k_min = std::exp(values.front());
    tail_table_ = std::make_shared<TailTable const>(TailTable{
        k_min, at_k_min, std::min(alpha, 2.0),
        boost::math::interpolators::cardinal_cubic_b_spline<double>(
            values.data(), values.size(), s0, step)});
}

double WalkSymbol::operator()(double k) const
{
    if (d_ != 1)
        throw ValidationError("scalar symbol evaluation requires d = 1");
    return eval_1d(k);
}

double WalkSymbol::operator()(std::span<double const> k) const
{
    if (static_cast<int>(k.size()) != d_)
        throw ValidationError("wave vector dimension mismatch");
    return d_ == 1 ? eval_1d(k[0]) : eval_nd(k);
}

double WalkSymbol::eval_1d(double k) const
{
    k = std::remainder(k, 2 * pi);
    double const a = std::abs(k);
    if (a == 0.0)
        return 0.0;
    double phi = 0.0;
    if (integer_alpha_)
    {
        auto const n0 = static_cast<int>(alpha_);
        double const fact = boost::math::factorial<double>(n0);
        double const kn = std::pow(a, n0);
        double singular;
        if (n0 % 2 == 0)
        {
            double harmonic = 0;
            for (int j = 1; j <= n0; ++j)
                harmonic += 1.0 / j;
            double const sign = (n0 / 2) % 2 == 0 ? 1.0 : -1.0;
            singular = sign * kn / fact * (harmonic - std::log(a));
        }
        else
        {
            double const sign = ((n0 - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
            singular = -sign * 0.5 * pi * kn / fact;
        }
        phi -= 2.0 * singular;
    }
    else
    {
        phi += singular_coef_ * std::pow(a, alpha_);
    }
    double const k2 = a * a;
    double kp = 1.0;
    double tail = 0.0;
    for (int m = 1; m <= max_series_order; ++m)
    {
        kp *= k2;
        double const term = even_coefs_[m] * kp;
        tail += term;
        if (m > 4 && std::abs(term) < 1e-18 * std::max(1.0, std::abs(tail)))
            break;
    }
    return std::max(0.0, phi + tail);
}

double WalkSymbol::continuum_tail(double knorm) const
{
    // int_{|v| > R} (1 - cos(k.v)) |v|^{-(d+alpha)} dv in polar form.
    double const R = ball_radius_;
    double const area = sphere_area(d_);
    double const plain = area * std::pow(R, -alpha_) / alpha_;
    if (knorm == 0.0)
        return 0.0;
    // Oscillatory part: int_R^inf r^{-1-alpha} j(|k| r) dr, integrated over
    // a bounded number of half-periods, then dropped.
    auto const& rule = gauss_legendre(16);
    double const step = pi / knorm;
    double osc = 0;
    double r0 = R;
    for (int p = 0; p < 400; ++p)
    {
        double const r1 = r0 + step;
        double piece = 0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        {
            double const r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * rule.nodes[i];
            piece += rule.weights[i] * std::pow(r, -1.0 - alpha_)
                     * radial_cos_average(d_, knorm * r);
        }
        osc += 0.5 * (r1 - r0) * piece;
        r0 = r1;
        if (std::abs(piece) * step < 1e-16)
            break;
    }
    return plain - area * osc;
}

double WalkSymbol::eval_nd(std::span<double const> k) const
{
    std::vector<double> kr(k.begin(), k.end());
    double knorm2 = 0;
    for (auto& v : kr)
    {
        v = std::remainder(v, 2 * pi);
        knorm2 += v * v;
    }
    if (knorm2 == 0.0)
        return 0.0;
    double sum = 0;
    for (std::size_t i = 0; i < ball_points_.size(); ++i)
    {
        double dot = 0;
        for (int a = 0; a < d_; ++a)
            dot += kr[a] * ball_points_[i][a];
        sum += (1.0 - std::cos(dot)) * ball_weights_[i];
    }
    return std::max(0.0, sum + tail(std::sqrt(knorm2)));
}

double WalkSymbol::tail(double knorm) const
{
    if (knorm == 0.0)
        return 0.0;
    auto const& t = *tail_table_;
    if (knorm < t.k_min)
        return t.at_k_min * std::pow(knorm / t.k_min, t.power);
    return std::exp(t.spline(std::log(knorm)));
}

std::vector<double> WalkSymbol::grid_2d(std::span<double const> nodes) const
{
    if (d_ != 2)
        throw ValidationError("grid_2d requires d = 2");
    // The ball is symmetric under y_a -> -y_a, so the sine terms cancel and
    // sum_y w (1 - cos k.y) = mass - sum_y w cos(k_1 y_1) cos(k_2 y_2).
    auto const r = static_cast<Eigen::Index>(std::floor(ball_radius_));
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(r + 1, r + 1);
    double mass = 0;
    for (std::size_t i = 0; i < ball_points_.size(); ++i)
    {
        auto const u = static_cast<Eigen::Index>(std::lround(std::abs(ball_points_[i][0])));
        auto const v = static_cast<Eigen::Index>(std::lround(std::abs(ball_points_[i][1])));
        W(u, v) += ball_weights_[i];
        mass += ball_weights_[i];
    }
    auto const m = static_cast<Eigen::Index>(nodes.size());
    std::vector<double> kr(nodes.size());
    Eigen::MatrixXd C(m, r + 1);
    for (Eigen::Index a = 0; a < m; ++a)
    {
        kr[a] = std::remainder(nodes[a], 2 * pi);
        for (Eigen::Index j = 0; j <= r; ++j)
            C(a, j) = std::cos(kr[a] * static_cast<double>(j));
    }
    Eigen::MatrixXd const S = C * W * C.transpose();
    std::vector<double> out(nodes.size() * nodes.size());
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
        {
            double const kn = std::hypot(kr[a], kr[b]);
            out[a * m + b]
                = kn == 0.0 ? 0.0 : std::max(0.0, mass - S(a, b) + tail(kn));
        }
    return out;
}

//---------------------------------------------------------------------------//
std::vector<double> transition_probabilities(WalkSymbol const& symbol,
                                             double t,
                                             std::span<std::int64_t const> xs,
                                             double tol)
{
    if (!(t >= 0))
        throw DomainError("transition time must be >= 0");
    if (symbol.dim() != 1)
        throw ValidationError("vector transition probabilities require d = 1");
    if (t == 0.0)
    {
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            out[i] = xs[i] == 0 ? 1.0 : 0.0;
        return out;
    }
    std::vector<double> xr(xs.begin(), xs.end());
    return damped_cosine_transform(
        [&symbol](double k) { return symbol(k); }, t, pi, xr, tol);
}

namespace
{
// Tensor Gauss-Legendre over [0, pi]^d, panels graded toward 0 per axis.
double tensor_transition(WalkSymbol const& symbol,
                         double t,
                         std::span<std::int64_t const> x,
                         std::size_t n)
{
    int const d = symbol.dim();
    std::vector<double> nodes, weights;
    auto const& rule = gauss_legendre(n);
    std::vector<double> breaks{0.0};
    for (int j = 20; j >= 0; --j)
        breaks.push_back(std::ldexp(pi, -j));
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b)
    {
        double const lo = breaks[b], hi = breaks[b + 1];
        for (std::size_t i = 0; i < n; ++i)
        {
            nodes.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[i]);
            weights.push_back(0.5 * (hi - lo) * rule.weights[i]);
        }
    }
    std::size_t const m = nodes.size();
    if (d == 2)
    {
        auto const phi = symbol.grid_2d(nodes);
        double total = 0;
        for (std::size_t a = 0; a < m; ++a)
        {
            double row = 0;
            for (std::size_t b = 0; b < m; ++b)
                row += weights[b] * std::cos(nodes[b] * static_cast<double>(x[1]))
                       * std::exp(-t * phi[a * m + b]);
            total += weights[a] * std::cos(nodes[a] * static_cast<double>(x[0]))
                     * row;
        }
        return total / (pi * pi);
    }
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> k(d);
    double total = 0;
    for (;;)
    {
        double w = 1.0, c = 1.0;
        for (int a = 0; a < d; ++a)
        {
            k[a] = nodes[idx[a]];
            w *= weights[idx[a]];
            c *= std::cos(k[a] * static_cast<double>(x[a]));
        }
        total += w * c * std::exp(-t * symbol(k));
        int a = d - 1;
        while (a >= 0 && ++idx[a] == m)
            idx[a--] = 0;
        if (a < 0)
            break;
    }
    return total / std::pow(pi, d);
}
}  // namespace

double transition_probability(WalkSymbol const& symbol,
                              double t,
                              std::span<std::int64_t const> x,
                              double tol)
{
    if (static_cast<int>(x.size()) != symbol.dim())
        throw ValidationError("site dimension mismatch");
    if (symbol.dim() == 1)
        return transition_probabilities(symbol, t, x, tol)[0];
    if (!(t >= 0))
        throw DomainError("transition time must be >= 0");
    if (t == 0.0)
        return std::all_of(x.begin(), x.end(), [](auto v) { return v == 0; })
                   ? 1.0
                   : 0.0;
    std::size_t n = 4;
    double prev = tensor_transition(symbol, t, x, n);
    double err = 0;
    for (; n <= 32; n *= 2)
    {
        double const next = tensor_transition(symbol, t, x, 2 * n);
        err = std::abs(next - prev);
        if (err <= tol)
            return next;
        prev = next;
    }
    throw ConvergenceError("tensor quadrature did not converge", err);
}

//---------------------------------------------------------------------------//
double scaling_h(double s, double alpha)
{
    if (alpha < 2.0)
        return std::pow(s, 1.0 / alpha);
    if (alpha == 2.0)
    {
        if (!(s > 1.0))
            throw DomainError(fmt::format(
                "h_2(s) = sqrt(s log s) needs s > 1, got {}", s));
        return std::sqrt(s * std::log(s));
    }
    return std::sqrt(s);
}

double normalizer(double N, int d, double alpha)
{
    auto need = [N](double bound, char const* rule) {
        if (!(N > bound))
            throw DomainError(fmt::format("{} needs N > {}, got {}", rule,
                                          bound, N));
    };
    if (d == 1)
    {
        if (alpha < 1.0)
            return std::sqrt(N);
        if (alpha == 1.0)
        {
            need(1.0, "sqrt(N log N)");
            return std::sqrt(N * std::log(N));
        }
        if (alpha < 2.0)
            return std::pow(N, 1.0 - 1.0 / (2.0 * alpha));
        if (alpha == 2.0)
        {
            need(1.0, "N^(3/4) (log N)^(-1/4)");
            return std::pow(N, 0.75) * std::pow(std::log(N), -0.25);
        }
        return std::pow(N, 0.75);
    }
    if (d == 2)
    {
        if (alpha < 2.0)
            return std::sqrt(N);
        if (alpha == 2.0)
        {
            need(std::numbers::e, "sqrt(N log log N)");
            return std::sqrt(N * std::log(std::log(N)));
        }
        need(1.0, "sqrt(N log N)");
        return std::sqrt(N * std::log(N));
    }
    return std::sqrt(N);
}

std::string normalizer_rule(int d, double alpha)
{
    if (d == 1)
    {
        if (alpha < 1.0)
            return "N^(1/2)";
        if (alpha == 1.0)
            return "(N log N)^(1/2)";
        if (alpha < 2.0)
            return fmt::format("N^(1-1/(2*{}))", alpha);
        if (alpha == 2.0)
            return "N^(3/4) (log N)^(-1/4)";
        return "N^(3/4)";
    }
    if (d == 2)
    {
        if (alpha < 2.0)
            return "N^(1/2)";
        if (alpha == 2.0)
            return "(N log log N)^(1/2)";
        return "(N log N)^(1/2)";
    }
    return "N^(1/2)";
}

std::string regime_label(int d, double alpha)
{
    if (d == 1)
    {
        if (alpha < 1.0)
            return "d=1, alpha<1";
        if (alpha == 1.0)
            return "d=1, alpha=1";
        if (alpha < 2.0)
            return "d=1, 1<alpha<2";
        if (alpha == 2.0)
            return "d=1, alpha=2";
        return "d=1, alpha>2";
    }
    if (d == 2)
    {
        if (alpha < 2.0)
            return "d=2, alpha<2";
        if (alpha == 2.0)
            return "d=2, alpha=2";
        return "d=2, alpha>2";
    }
    return "d>=3";
}

double lclt_discrepancy(double t, double s, double alpha, double window)
{
    if (!(t > 0) || !(s > 0) || !(window > 0))
        throw DomainError("lclt_discrepancy needs t, s, window > 0");
    double const h = scaling_h(s, alpha);
    auto const x_max = static_cast<std::int64_t>(std::floor(window * h));
    std::vector<std::int64_t> xs(x_max + 1);
    std::vector<double> us(x_max + 1);
    for (std::int64_t x = 0; x <= x_max; ++x)
    {
        xs[x] = x;
        us[x] = static_cast<double>(x) / h;
    }
    WalkSymbol const symbol(1, alpha);
    auto const p = transition_probabilities(symbol, t * s, xs, 1e-13);
    auto const f = stable_density_1d(t, us, alpha);
    double sup = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        sup = std::max(sup, std::abs(h * p[i] - f[i]));
    return sup;
}
}  // namespace zrp
