//! \file observable.cpp
#include "zrp/observable.hpp"

#include <algorithm>
#include <cmath>

#include "zrp/error.hpp"

namespace zrp
{
std::string to_string(ObservableKind kind)
{
    switch (kind)
    {
        case ObservableKind::occupation:
            return "occupation";
        case ObservableKind::rate_centered:
            return "rate_centered";
        case ObservableKind::window_custom:
            return "window_custom";
    }
    return "unknown";
}

ObservableKind observable_kind_from_string(std::string const& name)
{
    if (name == "occupation")
        return ObservableKind::occupation;
    if (name == "rate_centered")
        return ObservableKind::rate_centered;
    if (name == "window_custom")
        return ObservableKind::window_custom;
    throw ParseError("unknown observable kind '" + name + "'");
}

std::vector<std::vector<std::int64_t>> window_offsets(int d, double radius)
{
    if (d < 1 || radius < 0)
        throw ValidationError("window needs d >= 1 and radius >= 0");
    auto const m = static_cast<std::int64_t>(std::floor(radius));
    std::vector<std::vector<std::int64_t>> result;
    std::vector<std::int64_t> x(d, -m);
    while (true)
    {
        double r2 = 0;
        for (auto v : x)
            r2 += static_cast<double>(v * v);
        if (r2 <= radius * radius + 1e-12)
            result.push_back(x);
        int axis = d - 1;
        while (axis >= 0 && x[axis] == m)
        {
            x[axis] = -m;
            --axis;
        }
        if (axis < 0)
            break;
        ++x[axis];
    }
    return result;
}

ObservableSpec ObservableSpec::occupation()
{
    ObservableSpec s;
    s.kind_ = ObservableKind::occupation;
    s.offsets_ = {{0}};
    s.degree_ = 1;
    return s;
}

ObservableSpec ObservableSpec::rate_centered()
{
    ObservableSpec s;
    s.kind_ = ObservableKind::rate_centered;
    s.offsets_ = {{0}};
    s.degree_ = 1;
    return s;
}

ObservableSpec ObservableSpec::window_custom(int d,
                                             double radius,
                                             int cap,
                                             double poly_degree,
                                             TableFn const& fn,
                                             EquilibriumProfile const& profile)
{
    auto offsets = zrp::window_offsets(d, radius);
    std::size_t const m = offsets.size();
    std::size_t size = 1;
    for (std::size_t i = 0; i < m; ++i)
        size *= static_cast<std::size_t>(cap + 1);
    std::vector<double> table(size);
    std::vector<std::int32_t> tuple(m, 0);
    for (std::size_t idx = 0; idx < size; ++idx)
    {
        std::size_t rem = idx;
        for (std::size_t i = m; i-- > 0;)
        {
            tuple[i] = static_cast<std::int32_t>(rem % (cap + 1));
            rem /= (cap + 1);
        }
        table[idx] = fn(tuple);
    }
    return window_custom_table(d, radius, cap, poly_degree, std::move(table),
                               profile);
}

ObservableSpec
ObservableSpec::window_custom_table(int d,
                                    double radius,
                                    int cap,
                                    double poly_degree,
                                    std::vector<double> table,
                                    EquilibriumProfile const& profile)
{
    if (cap < 1)
        throw ValidationError("window table cap must be >= 1");
    ObservableSpec s;
    s.kind_ = ObservableKind::window_custom;
    s.radius_ = radius;
    s.cap_ = cap;
    s.degree_ = poly_degree;
    s.offsets_ = zrp::window_offsets(d, radius);
    std::size_t const m = s.offsets_.size();
    std::size_t size = 1;
    for (std::size_t i = 0; i < m; ++i)
        size *= static_cast<std::size_t>(cap + 1);
    if (table.size() != size)
        throw ValidationError("window table has " + std::to_string(table.size())
                              + " entries, expected "
                              + std::to_string(size));
    s.table_ = std::move(table);

    // Polynomial bound |V| <= (1 + window mass)^k on every tabulated tuple.
    for (std::size_t idx = 0; idx < size; ++idx)
    {
        std::size_t rem = idx;
        double mass = 0;
        for (std::size_t i = 0; i < m; ++i)
        {
            mass += static_cast<double>(rem % (cap + 1));
            rem /= (cap + 1);
        }
        if (std::abs(s.table_[idx]) > std::pow(1.0 + mass, poly_degree))
            throw ValidationError(
                "window table violates the recorded polynomial bound");
    }
    s.raw_mean_ = s.raw_mean_under(profile);
    return s;
}

double ObservableSpec::raw_value(std::span<std::int32_t const> window) const
{
    std::size_t idx = 0;
    for (auto k : window)
    {
        if (k > cap_)
            throw ValidationError("window occupancy " + std::to_string(k)
                                  + " exceeds the table cap "
                                  + std::to_string(cap_));
        idx = idx * static_cast<std::size_t>(cap_ + 1)
              + static_cast<std::size_t>(k);
    }
    return table_[idx];
}

double ObservableSpec::raw_mean_under(EquilibriumProfile const& profile) const
{
    if (kind_ != ObservableKind::window_custom)
        throw ValidationError("raw_mean_under applies to window tables only");
    std::size_t const m = offsets_.size();
    std::vector<double> p(cap_ + 1, 0.0);
    double covered = 0;
    for (int k = 0; k <= cap_; ++k)
    {
        p[k] = k < static_cast<int>(profile.pmf.size()) ? profile.pmf[k] : 0.0;
        covered += p[k];
    }
    double const tail = 1.0 - std::pow(std::min(covered, 1.0), m);
    if (tail > 1e-10)
        throw ValidationError("window table cap leaves equilibrium mass "
                              + std::to_string(tail) + " untabulated");
    double mean = 0;
    for (std::size_t idx = 0; idx < table_.size(); ++idx)
    {
        std::size_t rem = idx;
        double w = 1.0;
        for (std::size_t i = 0; i < m; ++i)
        {
            w *= p[rem % (cap_ + 1)];
            rem /= (cap_ + 1);
        }
        mean += w * table_[idx];
    }
    return mean;
}

double evaluate_observable(ObservableSpec const& obs,
                           std::span<std::int32_t const> window,
                           EquilibriumProfile const& profile)
{
    if (window.size() < obs.window_size())
        throw ValidationError("window does not cover the observable radius");
    switch (obs.kind())
    {
        case ObservableKind::occupation:
            return static_cast<double>(window[0]) - profile.gamma;
        case ObservableKind::rate_centered:
            return profile.family(window[0]) - profile.beta;
        case ObservableKind::window_custom:
            return obs.raw_value(window.first(obs.window_size()))
                   - obs.raw_mean();
    }
    return 0.0;
}

double vbar_prime_of(ObservableSpec const& obs,
                     EquilibriumProfile const& profile)
{
    switch (obs.kind())
    {
        case ObservableKind::occupation:
            return 1.0;
        case ObservableKind::rate_centered:
            return profile.beta_prime;
        case ObservableKind::window_custom: {
            double const h = 1e-4 * profile.gamma;
            auto const up
                = fugacity_of_density(profile.gamma + h, profile.family, 1e-15);
            auto const down
                = fugacity_of_density(profile.gamma - h, profile.family, 1e-15);
            return (obs.raw_mean_under(up) - obs.raw_mean_under(down)) / (2 * h);
        }
    }
    return 0.0;
}
}  // namespace zrp
