#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "zrp/error.hpp"
#include "zrp/lattice_sums.hpp"
#include "zrp/stable.hpp"
#include "zrp/walk.hpp"

using namespace zrp;

namespace
{
// sum_{0<|y|<=M} |y|^{-(1+a)} (1 - cos ky) plus the non-oscillating tail
// 2 M^{-a} / a and the leading oscillating tail from summation by parts
// (remainder O(M^{-2-a} / k^2)).
double brute_symbol_1d(double k, double a, long long M)
{
    double s = 0;
    for (long long y = M; y >= 1; --y)
    {
        double const yy = static_cast<double>(y);
        s += 2.0 * std::pow(yy, -1.0 - a) * (1.0 - std::cos(k * yy));
    }
    double const m = static_cast<double>(M) + 0.5;
    double const osc
        = std::pow(m, -1.0 - a) * std::sin(k * m) / (2.0 * std::sin(k / 2));
    return s + 2.0 * std::pow(m, -a) / a + 2.0 * osc;
}

double brute_symbol_2d(double k1, double k2, double a, long long R)
{
    double s = 0;
    double const p = (2.0 + a) / 2.0;
    for (long long x = -R; x <= R; ++x)
        for (long long y = -R; y <= R; ++y)
        {
            long long const r2 = x * x + y * y;
            if (r2 == 0 || r2 > R * R)
                continue;
            s += std::pow(static_cast<double>(r2), -p)
                 * (1.0 - std::cos(k1 * x + k2 * y));
        }
    double const r = static_cast<double>(R) + 0.5;
    return s + 2.0 * std::numbers::pi * std::pow(r, -a) / a;
}
}  // namespace

TEST_SUITE("spectral_walk")
{
    TEST_CASE("symbol special values")
    {
        WalkSymbol const s3(1, 3.0);
        CHECK(s3(0.0) == 0.0);
        CHECK(s3(std::numbers::pi)
              == doctest::Approx(std::pow(std::numbers::pi, 4) / 24).epsilon(1e-12));
        Rng rng(1);
        for (double a : {0.5, 1.0, 1.5, 2.0, 3.0})
        {
            WalkSymbol const s(1, a);
            for (int i = 0; i < 20; ++i)
            {
                double const k = rng.uniform() * 2 * std::numbers::pi;
                CHECK(s(k) == s(-k));
            }
        }
        CHECK_THROWS_AS(WalkSymbol(1, 0.0), DomainError);
        CHECK_THROWS_AS(WalkSymbol(2, 1.0)(0.5), ValidationError);
    }

    TEST_CASE("symbol against brute-force sums in d=1")
    {
        for (double a : {0.5, 1.0, 1.5, 2.0, 3.0})
        {
            WalkSymbol const s(1, a);
            for (double k : {0.01, 0.3, 1.7, 3.0})
            {
                double const b = brute_symbol_1d(k, a, 4000000);
                CHECK(s(k) == doctest::Approx(b).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("symbol against brute-force sums in d=2")
    {
        WalkSymbol const s(2, 3.0);
        for (auto [k1, k2] : {std::pair{0.4, 0.1}, std::pair{2.0, -1.0}})
        {
            std::vector<double> k{k1, k2};
            CHECK(s(k) == doctest::Approx(brute_symbol_2d(k1, k2, 3.0, 1500))
                               .epsilon(2e-4));
        }
        std::vector<double> z{0, 0};
        CHECK(s(z) == 0.0);
    }

    TEST_CASE("transition probabilities")
    {
        WalkSymbol const s(1, 1.5);
        std::vector<std::int64_t> xs{0, 1, 5};
        auto const p0 = transition_probabilities(s, 0.0, xs);
        CHECK(p0[0] == 1.0);
        CHECK(p0[1] == 0.0);
        CHECK(p0[2] == 0.0);

        std::int64_t const X = 10000;
        std::vector<std::int64_t> all(X + 1);
        for (std::int64_t x = 0; x <= X; ++x)
            all[x] = x;
        auto const p1 = transition_probabilities(s, 1.0, all);
        double mass = p1[0], sq = p1[0] * p1[0];
        for (std::int64_t x = 1; x <= X; ++x)
        {
            mass += 2 * p1[x];
            sq += 2 * p1[x] * p1[x];
        }
        // far tail of p_1 is t |x|^{-(1+alpha)} to leading order
        double const tail = 2.0 * lattice::hurwitz_zeta(2.5, X + 1.0);
        CHECK(std::abs(mass + tail - 1.0) < 1e-8);
        CHECK(1.0 - mass > 1e-6);  // the bare window misses the tail mass

        std::int64_t const zero = 0;
        double const p2 = transition_probabilities(s, 2.0, std::span(&zero, 1))[0];
        CHECK(std::abs(p2 - sq) < 1e-8);

        // scalar and vector routes agree, and the d=2 route is symmetric
        CHECK(transition_probability(s, 1.0, std::span(&zero, 1))
              == doctest::Approx(p1[0]).epsilon(1e-9));
        WalkSymbol const s2(2, 3.0);
        std::vector<std::int64_t> a{1, 2}, b{-2, 1}, o{0, 0};
        CHECK(transition_probability(s2, 1.0, a)
              == doctest::Approx(transition_probability(s2, 1.0, b)).epsilon(1e-8));
        CHECK(transition_probability(s2, 0.0, o) == 1.0);
        CHECK_THROWS_AS(transition_probabilities(s, -1.0, xs), DomainError);
    }

    TEST_CASE("scaling functions and normalizers")
    {
        CHECK(scaling_h(100, 1.5) == doctest::Approx(21.5443469).epsilon(1e-8));
        CHECK(scaling_h(100, 3.0) == 10.0);
        CHECK(scaling_h(std::exp(1.0), 2.0)
              == doctest::Approx(std::sqrt(std::exp(1.0))).epsilon(1e-14));
        CHECK_THROWS_AS(scaling_h(1.0, 2.0), DomainError);
        CHECK(normalizer(1e4, 1, 1.5) == doctest::Approx(464.158883).epsilon(1e-8));
        double const e4 = std::exp(4.0);
        CHECK(normalizer(e4, 2, 3.0)
              == doctest::Approx(2 * std::exp(2.0)).epsilon(1e-13));
        CHECK(normalizer(100, 1, 0.5) == 10.0);
        CHECK(normalizer(100, 3, 1.0) == 10.0);
        CHECK_THROWS_AS(normalizer(2.0, 2, 2.0), DomainError);
        CHECK_THROWS_AS(normalizer(1.0, 1, 1.0), DomainError);
        CHECK(normalizer_rule(1, 1.5) == "N^(1-1/(2*1.5))");
        CHECK(regime_label(1, 0.5) == "d=1, alpha<1");
        CHECK(regime_label(4, 2.0) == "d>=3");
    }

    TEST_CASE("local limit discrepancy vanishes")
    {
        for (double a : {1.5, 3.0})
        {
            double const d2 = lclt_discrepancy(1.0, 1e2, a, 10);
            double const d3 = lclt_discrepancy(1.0, 1e3, a, 10);
            double const d4 = lclt_discrepancy(1.0, 1e4, a, 10);
            CHECK(d3 < d2);
            CHECK(d4 < d3);
        }
        WalkSymbol const s(1, 1.5);
        std::int64_t const zero = 0;
        double const s4 = 1e4;
        double const origin = scaling_h(s4, 1.5)
                              * transition_probability(s, s4, std::span(&zero, 1));
        CHECK(std::abs(origin / stable_density_at_origin(1.0, 1, 1.5) - 1) < 0.02);
        WalkSymbol const g(1, 3.0);
        double const gauss = 1.0 / std::sqrt(2 * std::numbers::pi
                                             * std::numbers::pi
                                             * std::numbers::pi / 3);
        double const o3 = std::sqrt(s4)
                          * transition_probability(g, s4, std::span(&zero, 1));
        CHECK(std::abs(o3 / gauss - 1) < 0.02);
        CHECK_THROWS_AS(lclt_discrepancy(0, 1, 1.5, 1), DomainError);
    }
}
