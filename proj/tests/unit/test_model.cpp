#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "zrp/error.hpp"
#include "zrp/lattice_sums.hpp"
#include "zrp/model.hpp"

using namespace zrp;

namespace
{
double brute_sum_1d(double p, long long M)
{
    // sum over 0 < |y| <= M plus the integral tail 2 * M^{1-p} / (p - 1)
    // with the midpoint correction
    double s = 0;
    for (long long y = M; y >= 1; --y)
        s += 2.0 * std::pow(static_cast<double>(y), -p);
    double const m = static_cast<double>(M) + 0.5;
    return s + 2.0 * std::pow(m, 1.0 - p) / (p - 1.0);
}

double brute_sum_2d(double p, long long R)
{
    double s = 0;
    for (long long x = -R; x <= R; ++x)
        for (long long y = -R; y <= R; ++y)
        {
            double const r2 = static_cast<double>(x * x + y * y);
            if (r2 == 0 || r2 > static_cast<double>(R * R))
                continue;
            s += std::pow(r2, -p / 2);
        }
    // continuum tail outside the disc, radius shifted by the Gauss circle
    // effective area
    double const r = static_cast<double>(R) + 0.5;
    return s + 2.0 * std::numbers::pi * std::pow(r, 2.0 - p) / (p - 2.0);
}
}  // namespace

TEST_SUITE("model_core")
{
    TEST_CASE("rate family values")
    {
        auto const lin = RateFamily::linear(1.0);
        CHECK(lin(5) == 5.0);
        CHECK(lin(0) == 0.0);
        auto const aff = RateFamily::affine(1.0, 0.5);
        CHECK(aff(0) == 0.0);
        CHECK(aff(3) == 3.5);
        CHECK(rate(3, aff) == 3.5);
    }

    TEST_CASE("rate family validation")
    {
        auto const v = validate_rate_family(RateFamily::linear(1.0), 100);
        CHECK(v.accepted);
        CHECK(v.inf_increment == 1.0);
        CHECK(v.sup_increment == 1.0);

        auto const bad = validate_rate_family(RateFamily::affine(1.0, -2.0),
                                              100);
        CHECK_FALSE(bad.accepted);
        CHECK(bad.offending_k == 0);
        CHECK(bad.inf_increment == doctest::Approx(-1.0));

        auto const ok = validate_rate_family(RateFamily::affine(2.0, -1.0),
                                             100);
        CHECK(ok.accepted);
        CHECK(ok.inf_increment == 1.0);
        CHECK(ok.sup_increment == 2.0);
    }

    TEST_CASE("model spec invariants")
    {
        ModelSpec s;
        s.L = 64;
        CHECK_NOTHROW(s.validate());
        s.L = 7;
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.L = 2;
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.L = 8;
        s.alpha = 0;
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.alpha = 1;
        s.gamma = -1;
        CHECK_THROWS_AS(s.validate(), ValidationError);
        s.gamma = 1;
        s.rate_family = RateFamily::affine(1.0, -2.0);
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }

    TEST_CASE("minimal image and site numbering")
    {
        for (int d : {1, 2, 3})
        {
            TorusGeometry g(d, 6);
            for (std::size_t a = 0; a < g.num_sites(); a += 7)
                for (std::size_t b = 0; b < g.num_sites(); b += 5)
                {
                    auto const dx = g.displacement(a, b);
                    for (auto c : dx)
                    {
                        CHECK(c > -3);
                        CHECK(c <= 3);
                    }
                    CHECK(g.translate(a, dx) == b);
                    auto const ca = g.coords(a);
                    CHECK(g.site(ca) == a);
                }
        }
        TorusGeometry g(1, 8);
        CHECK(g.minimal_image(4) == 4);
        CHECK(g.minimal_image(-4) == 4);
        CHECK(g.minimal_image(5) == -3);
        CHECK(g.minimal_image(-17) == -1);
    }

    TEST_CASE("kernel weights")
    {
        ModelSpec s;
        s.d = 1;
        s.alpha = 3;
        std::vector<std::int64_t> two{2};
        CHECK(kernel_weight(two, s) == doctest::Approx(0.0625).epsilon(1e-15));
        std::vector<std::int64_t> zero{0};
        CHECK(kernel_weight(zero, s) == 0.0);
        s.d = 2;
        s.alpha = 1;
        std::vector<std::int64_t> diag{1, 1};
        CHECK(kernel_weight(diag, s)
              == doctest::Approx(std::pow(std::sqrt(2.0), -3)).epsilon(1e-14));
        std::vector<std::int64_t> z2{0, 0};
        CHECK(kernel_weight(z2, s) == 0.0);
    }

    TEST_CASE("kernel mass on the torus and the infinite lattice")
    {
        ModelSpec s;
        s.d = 1;
        s.alpha = 3;
        s.L = 4;
        CHECK(kernel_mass(s) == doctest::Approx(2.0625).epsilon(1e-14));

        double const pi4_45 = std::pow(std::numbers::pi, 4) / 45.0;
        CHECK(kernel_mass_infinite(1, 3.0)
              == doctest::Approx(pi4_45).epsilon(1e-12));
        CHECK(kernel_mass_infinite(1, 0.5)
              == doctest::Approx(brute_sum_1d(1.5, 2000000)).epsilon(1e-8));

        // d=2, alpha=2: brute-force disc sum plus tail correction
        double const brute = brute_sum_2d(4.0, 2000);
        CHECK(kernel_mass_infinite(2, 2.0)
              == doctest::Approx(brute).epsilon(1e-6));
        // closed form 4 zeta(2) beta(2)
        double const catalan = 0.915965594177219015054603514932;
        CHECK(kernel_mass_infinite(2, 2.0)
              == doctest::Approx(4 * std::numbers::pi * std::numbers::pi / 6
                                 * catalan)
                     .epsilon(1e-12));

        // a large torus approaches the infinite lattice
        s.L = 1 << 14;
        CHECK(kernel_mass(s) == doctest::Approx(pi4_45).epsilon(1e-9));
    }

    TEST_CASE("lattice sums agree across methods")
    {
        for (double sv : {1.25, 1.5, 2.0, 2.5})
            CHECK(lattice::square_lattice_sum(sv)
                  == doctest::Approx(lattice::square_lattice_sum_bessel(sv))
                         .epsilon(1e-11));
        for (double sv : {1.25, 2.0})
            CHECK(lattice::epstein_theta(2, sv)
                  == doctest::Approx(lattice::square_lattice_sum(sv))
                         .epsilon(1e-10));
        {
            long long const R = 200;
            double b = 0;
            for (long long x = -R; x <= R; ++x)
                for (long long y = -R; y <= R; ++y)
                    for (long long z = -R; z <= R; ++z)
                    {
                        long long const r2 = x * x + y * y + z * z;
                        if (r2 == 0 || r2 > R * R)
                            continue;
                        double const q = static_cast<double>(r2);
                        b += 1.0 / (q * q);
                    }
            b += 4.0 * std::numbers::pi / (static_cast<double>(R) + 0.5);
            CHECK(lattice::power_sum(3, 4.0) == doctest::Approx(b).epsilon(2e-5));
        }
        CHECK(lattice::riemann_zeta(2.0)
              == doctest::Approx(std::numbers::pi * std::numbers::pi / 6)
                     .epsilon(1e-14));
        CHECK(lattice::hurwitz_zeta(3.0, 1.0)
              == doctest::Approx(lattice::riemann_zeta(3.0)).epsilon(1e-13));
        CHECK(lattice::dirichlet_beta(1.0)
              == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
    }
}
