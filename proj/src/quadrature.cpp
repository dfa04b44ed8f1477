//! \file quadrature.cpp
#include "zrp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "zrp/error.hpp"

namespace zrp
{
namespace
{
GaussLegendreRule make_rule(std::size_t n)
{
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i)
    {
        // Newton iteration from the Tricomi initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int iter = 0; iter < 100; ++iter)
        {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k)
            {
                double const p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0)
                                  / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            double const pn = n == 1 ? x : p1;
            double const pnm1 = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            double const dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        double const w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}
}  // namespace

GaussLegendreRule const& gauss_legendre(std::size_t n)
{
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<GaussLegendreRule>(make_rule(n));
    return *slot;
}

std::vector<double>
damped_cosine_transform(std::function<double(double)> const& psi,
                        double t,
                        double k_limit,
                        std::span<double const> xs,
                        double tol)
{
    constexpr double damping_cutoff = 60.0;  // exp(-60) ~ 1e-26
    constexpr int geometric_levels = 64;

    // Upper limit: first k where t psi(k) exceeds the cutoff.
    double k_max = k_limit;
    if (t > 0 && t * psi(k_limit) > damping_cutoff)
    {
        double lo = 0, hi = k_limit;
        for (int i = 0; i < 200 && hi - lo > 1e-15 * k_limit; ++i)
        {
            double const mid = 0.5 * (lo + hi);
            (t * psi(mid) > damping_cutoff ? hi : lo) = mid;
        }
        k_max = hi;
    }
    double x_max = 0;
    for (double x : xs)
        x_max = std::max(x_max, std::abs(x));

    // Breakpoints: geometric toward 0, each panel split per oscillation.
    std::vector<double> breaks{0.0};
    {
        std::vector<double> geo;
        for (int j = geometric_levels; j >= 0; --j)
            geo.push_back(std::ldexp(k_max, -j));
        double prev = 0;
        for (double b : geo)
        {
            double const width = b - prev;
            auto const pieces = static_cast<std::size_t>(
                std::ceil(width * x_max / (2 * std::numbers::pi))) + 1;
            for (std::size_t p = 1; p <= pieces; ++p)
                breaks.push_back(prev + width * p / pieces);
            prev = b;
        }
    }

    auto evaluate = [&](std::size_t n) {
        auto const& rule = gauss_legendre(n);
        std::vector<double> out(xs.size(), 0.0);
        for (std::size_t b = 0; b + 1 < breaks.size(); ++b)
        {
            double const a = breaks[b], c = breaks[b + 1];
            double const half = 0.5 * (c - a), mid = 0.5 * (c + a);
            for (std::size_t i = 0; i < n; ++i)
            {
                double const k = mid + half * rule.nodes[i];
                double const w = half * rule.weights[i] * std::exp(-t * psi(k));
                if (w == 0.0)
                    continue;
                for (std::size_t j = 0; j < xs.size(); ++j)
                    out[j] += w * std::cos(k * xs[j]);
            }
        }
        for (auto& v : out)
            v /= std::numbers::pi;
        return out;
    };

    std::size_t n = 8;
    auto prev = evaluate(n);
    double err = 0;
    for (; n <= 512; n *= 2)
    {
        auto next = evaluate(2 * n);
        err = 0;
        for (std::size_t j = 0; j < xs.size(); ++j)
            err = std::max(err, std::abs(next[j] - prev[j]));
        if (err <= tol)
            return next;
        prev = std::move(next);
    }
    throw ConvergenceError("damped cosine transform did not converge", err);
}
}  // namespace zrp
