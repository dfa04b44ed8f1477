//! \file equilibrium.cpp
#include "zrp/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zrp/error.hpp"

namespace zrp
{
namespace
{
struct Series
{
    std::vector<double> log_weight;  // log(beta^k / c(k)!)
    double log_max = 0;
};

// Sum terms until the ratio bound w_{k+1}/w_k = beta/c(k+1) < 1 certifies
// that the geometric tail is below tol relative to the partial sum.
Series build_series(double beta, RateFamily const& family, double tol)
{
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ValidationError("fugacity beta must be positive and finite");
    if (!(tol > 0.0))
        throw ValidationError("series tolerance must be positive");
    if (!(family.min_increment() > 0.0))
        throw ConvergenceError(
            "partition series does not converge: c^- <= 0 for this family");

    Series s;
    double const log_beta = std::log(beta);
    s.log_weight.push_back(0.0);
    double partial = 1.0;  // sum of exp(lw - log_max)
    constexpr std::int64_t k_limit = 100000000;
    for (std::int64_t k = 1; k < k_limit; ++k)
    {
        double const lw = s.log_weight.back() + log_beta - std::log(family(k));
        s.log_weight.push_back(lw);
        if (lw > s.log_max)
        {
            partial *= std::exp(s.log_max - lw);
            s.log_max = lw;
        }
        partial += std::exp(lw - s.log_max);

        double const ratio = beta / family(k + 1);
        if (ratio < 1.0)
        {
            // Tail sum_{j>k} w_j <= w_k * r / (1 - r); also dominates the
            // first and second moments once k is past the mode by a margin.
            double const tail
                = std::exp(lw - s.log_max) * ratio / (1.0 - ratio);
            double const moment_factor = (k + 1.0) * (k + 1.0);
            if (tail * moment_factor <= tol * partial)
                return s;
        }
    }
    throw ConvergenceError("partition series exceeded the term limit");
}

struct Moments
{
    double log_Z;
    double m1;
    double var;
    double crate;
};

Moments moments_of(Series const& s, RateFamily const& family)
{
    double z = 0;
    for (std::size_t k = s.log_weight.size(); k-- > 0;)
        z += std::exp(s.log_weight[k] - s.log_max);
    double m1 = 0;
    for (std::size_t k = s.log_weight.size(); k-- > 0;)
        m1 += k * std::exp(s.log_weight[k] - s.log_max);
    m1 /= z;
    double var = 0, crate = 0;
    for (std::size_t k = s.log_weight.size(); k-- > 0;)
    {
        double const p = std::exp(s.log_weight[k] - s.log_max) / z;
        var += (k - m1) * (k - m1) * p;
        crate += family(static_cast<std::int64_t>(k)) * p;
    }
    return {s.log_max + std::log(z), m1, var, crate};
}
}  // namespace

double partition_function(double beta, RateFamily const& family, double tol)
{
    auto const s = build_series(beta, family, tol);
    return std::exp(moments_of(s, family).log_Z);
}

double mean_occupancy(double beta, RateFamily const& family, double tol)
{
    auto const s = build_series(beta, family, tol);
    return moments_of(s, family).m1;
}

EquilibriumProfile
profile_of_fugacity(double beta, RateFamily const& family, double tol)
{
    auto const s = build_series(beta, family, tol);
    auto const m = moments_of(s, family);

    EquilibriumProfile p;
    p.family = family;
    p.beta = beta;
    p.gamma = m.m1;
    p.log_Z = m.log_Z;
    p.Z = std::exp(m.log_Z);
    p.var_occ = m.var;
    p.beta_prime = beta / m.var;
    p.pmf.reserve(s.log_weight.size());
    for (double lw : s.log_weight)
        p.pmf.push_back(std::exp(lw - m.log_Z));

    p.cdf.resize(p.pmf.size());
    double acc = 0;
    for (std::size_t k = 0; k < p.pmf.size(); ++k)
    {
        acc += p.pmf[k];
        p.cdf[k] = acc;
    }
    // Tail mass beyond K_trunc (below tolerance) goes to the last entry.
    for (auto& c : p.cdf)
        c = std::min(c / acc, 1.0);
    p.cdf.back() = 1.0;
    return p;
}

EquilibriumProfile
fugacity_of_density(double gamma, RateFamily const& family, double tol)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ValidationError("density gamma must be positive and finite");

    double lo = gamma * family.min_increment();
    double hi = lo;
    int grow = 0;
    while (mean_occupancy(lo, family) > gamma)
    {
        lo *= 0.5;
        if (++grow > 2000 || lo == 0.0)
            throw ConvergenceError("could not bracket fugacity from below");
    }
    while (mean_occupancy(hi, family) < gamma)
    {
        hi *= 2.0;
        if (++grow > 2000 || !std::isfinite(hi))
            throw ConvergenceError("could not bracket fugacity from above");
    }

    double beta = std::sqrt(lo * hi);
    for (int iter = 0; iter < 400; ++iter)
    {
        beta = 0.5 * (lo + hi);
        double const g = mean_occupancy(beta, family);
        if (std::abs(g - gamma) <= tol)
            break;
        (g < gamma ? lo : hi) = beta;
        if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi)
            break;
    }
    auto profile = profile_of_fugacity(beta, family);
    if (std::abs(profile.gamma - gamma) > tol)
        throw ConvergenceError("fugacity bisection did not reach tolerance",
                               std::abs(profile.gamma - gamma));
    return profile;
}

double occupancy_variance(EquilibriumProfile const& profile)
{
    double m1 = 0;
    for (std::size_t k = 0; k < profile.pmf.size(); ++k)
        m1 += k * profile.pmf[k];
    double var = 0;
    for (std::size_t k = 0; k < profile.pmf.size(); ++k)
        var += (k - m1) * (k - m1) * profile.pmf[k];
    return var;
}

double beta_prime_finite_difference(double gamma,
                                    RateFamily const& family,
                                    double rel_step)
{
    double const h = rel_step * gamma;
    double const up = fugacity_of_density(gamma + h, family, 1e-15).beta;
    double const down = fugacity_of_density(gamma - h, family, 1e-15).beta;
    return (up - down) / (2 * h);
}

std::int64_t sample_marginal(Rng& rng, EquilibriumProfile const& profile)
{
    double const u = rng.uniform();
    auto it = std::upper_bound(profile.cdf.begin(), profile.cdf.end(), u);
    if (it == profile.cdf.end())
        --it;
    return static_cast<std::int64_t>(it - profile.cdf.begin());
}

nlohmann::json rate_family_to_json(RateFamily const& family)
{
    nlohmann::json j{{"kind", to_string(family.kind())},
                     {"a", family.slope()}};
    if (family.kind() == RateKind::affine)
        j["b"] = family.offset();
    return j;
}

RateFamily rate_family_from_json(nlohmann::json const& j)
{
    if (!j.is_object() || !j.contains("kind"))
        throw ParseError("rate: missing field 'kind'");
    RateKind kind;
    try
    {
        kind = rate_kind_from_string(j.at("kind").get<std::string>());
    }
    catch (ParseError const& e)
    {
        throw ParseError(std::string("rate.kind: ") + e.what());
    }
    if (!j.contains("a"))
        throw ParseError("rate: missing field 'a'");
    double const a = j.at("a").get<double>();
    if (kind == RateKind::linear)
        return RateFamily::linear(a);
    if (!j.contains("b"))
        throw ParseError("rate: affine family needs field 'b'");
    return RateFamily::affine(a, j.at("b").get<double>());
}

nlohmann::json profile_to_json(EquilibriumProfile const& p)
{
    return {{"family", rate_family_to_json(p.family)},
            {"beta", p.beta},
            {"gamma", p.gamma},
            {"Z", p.Z},
            {"var_occ", p.var_occ},
            {"beta_prime", p.beta_prime},
            {"K_trunc", p.k_trunc()},
            {"pmf", p.pmf}};
}
}  // namespace zrp
