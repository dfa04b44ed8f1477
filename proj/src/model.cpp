//! \file model.cpp
#include "zrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "zrp/error.hpp"
#include "zrp/lattice_sums.hpp"

namespace zrp
{
std::string to_string(RateKind kind)
{
    return kind == RateKind::linear ? "linear" : "affine";
}

RateKind rate_kind_from_string(std::string const& name)
{
    if (name == "linear")
        return RateKind::linear;
    if (name == "affine")
        return RateKind::affine;
    throw ParseError("unknown rate kind '" + name
                     + "' (expected 'linear' or 'affine')");
}

RateFamily RateFamily::linear(double a)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw ValidationError("linear rate slope must be positive and finite");
    return RateFamily(RateKind::linear, a, 0.0);
}

RateFamily RateFamily::affine(double a, double b)
{
    if (!std::isfinite(a) || !std::isfinite(b))
        throw ValidationError("affine rate parameters must be finite");
    // Admissibility (a > 0, a + b > 0) is reported by validate_rate_family so
    // that offending families can still be inspected.
    return RateFamily(RateKind::affine, a, b);
}

double RateFamily::min_increment() const
{
    return kind_ == RateKind::linear ? a_ : std::min(a_, a_ + b_);
}

double RateFamily::max_increment() const
{
    return kind_ == RateKind::linear ? a_ : std::max(a_, a_ + b_);
}

RateValidation validate_rate_family(RateFamily const& family,
                                    std::int64_t k_max)
{
    if (k_max < 1)
        throw ValidationError("validate_rate_family requires k_max >= 1");
    RateValidation report;
    report.inf_increment = std::numeric_limits<double>::infinity();
    report.sup_increment = -std::numeric_limits<double>::infinity();
    if (family(0) != 0.0)
    {
        report.offending_k = 0;
        report.message = "c(0) must be 0";
        return report;
    }
    for (std::int64_t k = 0; k < k_max; ++k)
    {
        double const inc = family(k + 1) - family(k);
        report.inf_increment = std::min(report.inf_increment, inc);
        report.sup_increment = std::max(report.sup_increment, inc);
        if (!(inc > 0.0) && report.offending_k < 0)
        {
            report.offending_k = k;
            std::ostringstream os;
            os << "increment c(" << k + 1 << ") - c(" << k << ") = " << inc
               << " is not positive";
            report.message = os.str();
        }
    }
    report.accepted = report.offending_k < 0;
    return report;
}

void ModelSpec::validate(std::int64_t k_max) const
{
    std::ostringstream os;
    if (d < 1)
        os << "dimension d = " << d << " must be >= 1";
    else if (!(alpha > 0.0) || !std::isfinite(alpha))
        os << "alpha = " << alpha << " must be > 0";
    else if (L < 4 || L % 2 != 0)
        os << "torus side L = " << L << " must be even and >= 4";
    else if (!(gamma > 0.0) || !std::isfinite(gamma))
        os << "density gamma = " << gamma << " must be > 0";
    else
    {
        auto report = validate_rate_family(rate_family, k_max);
        if (!report.accepted)
            os << "rate family rejected: " << report.message;
    }
    if (!os.str().empty())
        throw ValidationError(os.str());
}

//---------------------------------------------------------------------------//
TorusGeometry::TorusGeometry(int d, std::int64_t L) : d_(d), L_(L), n_(1)
{
    if (d < 1 || L < 2)
        throw ValidationError("torus needs d >= 1 and L >= 2");
    for (int i = 0; i < d; ++i)
        n_ *= static_cast<std::size_t>(L);
}

std::int64_t TorusGeometry::minimal_image(std::int64_t dx) const
{
    dx %= L_;
    if (dx < 0)
        dx += L_;
    // Representative in (-L/2, L/2]
    if (2 * dx > L_)
        dx -= L_;
    return dx;
}

std::vector<std::int64_t> TorusGeometry::coords(std::size_t site) const
{
    std::vector<std::int64_t> c(d_);
    for (int i = d_ - 1; i >= 0; --i)
    {
        c[i] = static_cast<std::int64_t>(site % L_);
        site /= L_;
    }
    return c;
}

std::size_t TorusGeometry::site(std::span<std::int64_t const> c) const
{
    std::size_t s = 0;
    for (int i = 0; i < d_; ++i)
    {
        std::int64_t v = c[i] % L_;
        if (v < 0)
            v += L_;
        s = s * L_ + static_cast<std::size_t>(v);
    }
    return s;
}

std::size_t TorusGeometry::translate(std::size_t from,
                                     std::span<std::int64_t const> dx) const
{
    auto c = coords(from);
    for (int i = 0; i < d_; ++i)
        c[i] += dx[i];
    return site(c);
}

std::vector<std::int64_t>
TorusGeometry::displacement(std::size_t a, std::size_t b) const
{
    auto ca = coords(a);
    auto cb = coords(b);
    for (int i = 0; i < d_; ++i)
        ca[i] = minimal_image(cb[i] - ca[i]);
    return ca;
}

double TorusGeometry::distance_squared(std::size_t a, std::size_t b) const
{
    double r2 = 0;
    for (auto v : displacement(a, b))
        r2 += static_cast<double>(v) * static_cast<double>(v);
    return r2;
}

//---------------------------------------------------------------------------//
double kernel_weight_r2(double r2, int d, double alpha)
{
    if (r2 == 0.0)
        return 0.0;
    return std::pow(r2, -0.5 * (d + alpha));
}

double kernel_weight(std::span<std::int64_t const> dx, ModelSpec const& spec)
{
    double r2 = 0;
    for (auto v : dx)
        r2 += static_cast<double>(v) * static_cast<double>(v);
    return kernel_weight_r2(r2, spec.d, spec.alpha);
}

double kernel_mass(ModelSpec const& spec)
{
    TorusGeometry const geo(spec.d, spec.L);
    // Sum smallest terms first.
    std::vector<double> w;
    w.reserve(geo.num_sites());
    for (std::size_t s = 1; s < geo.num_sites(); ++s)
        w.push_back(kernel_weight_r2(geo.distance_squared(0, s), spec.d,
                                     spec.alpha));
    std::sort(w.begin(), w.end());
    double sum = 0;
    for (double v : w)
        sum += v;
    return sum;
}

double kernel_mass_infinite(int d, double alpha)
{
    if (!(alpha > 0.0))
        throw DomainError("infinite-lattice kernel mass diverges for alpha <= 0");
    return lattice::power_sum(d, d + alpha);
}
}  // namespace zrp
