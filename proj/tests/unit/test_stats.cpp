#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/poisson.hpp>

#include "zrp/error.hpp"
#include "zrp/random.hpp"
#include "zrp/stable.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

namespace
{
std::vector<double> ar1(Rng& rng, std::size_t n, double phi)
{
    std::vector<double> x(n);
    double const s = std::sqrt(1 - phi * phi);
    double v = rng.normal();
    for (auto& xi : x)
    {
        v = phi * v + s * rng.normal();
        xi = v;
    }
    return x;
}

double sample_variance_biased(std::vector<double> const& x)
{
    double const m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double ss = 0;
    for (double v : x)
        ss += (v - m) * (v - m);
    return ss / x.size();
}
}  // namespace

TEST_SUITE("stats_harness")
{
    TEST_CASE("autocovariance of white noise and AR(1)")
    {
        Rng rng(3);
        {
            std::vector<double> x(200000);
            for (auto& v : x)
                v = rng.normal();
            auto const est = autocovariance(x, 10);
            CHECK(est.value[0]
                  == doctest::Approx(sample_variance_biased(x)).epsilon(1e-12));
            for (std::size_t l = 1; l <= 10; ++l)
                CHECK(std::abs(est.value[l]) < 4.5 / std::sqrt(200000.0));
        }
        double const phi = 0.8;
        auto const x = ar1(rng, 400000, phi);
        auto const est = autocovariance(x, 20, 1.0, 40);
        for (std::size_t l = 0; l <= 20; ++l)
        {
            double const target = std::pow(phi, static_cast<double>(l));
            CHECK(std::abs(est.value[l] - target) < 4 * est.se[l] + 1e-3);
        }
        CHECK_THROWS_AS(autocovariance(std::span(x.data(), 30), 20),
                        ValidationError);
    }

    TEST_CASE("multi-channel accumulator matches the single-channel path")
    {
        Rng rng(5);
        auto const a = ar1(rng, 5000, 0.5);
        auto const b = ar1(rng, 5000, 0.5);
        AutocovAccumulator acc(2, 5, 5000);
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            double const snap[2] = {a[i], b[i]};
            acc.push(snap);
        }
        auto const est = acc.finish(1.0);
        std::vector<double> ab(a);
        ab.insert(ab.end(), b.begin(), b.end());
        double const m = std::accumulate(ab.begin(), ab.end(), 0.0) / ab.size();
        for (std::size_t l = 0; l <= 5; ++l)
        {
            double s = 0;
            for (std::size_t i = l; i < a.size(); ++i)
                s += (a[i] - m) * (a[i - l] - m) + (b[i] - m) * (b[i - l] - m);
            CHECK(est.value[l] == doctest::Approx(s / ab.size()).epsilon(1e-10));
        }
    }

    TEST_CASE("integrated autocovariance")
    {
        // OU sampled at dt: C(s) = exp(-s), 2 int C = 2
        Rng rng(7);
        double const dt = 0.05;
        auto const x = ar1(rng, 400000, std::exp(-dt));
        auto const est = autocovariance(x, 200, dt, 40);
        auto const ia = integrated_autocovariance(est);
        REQUIRE(ia.value);
        CHECK(*ia.value == doctest::Approx(2.0).epsilon(0.1));
        CHECK(ia.se > 0);

        // white noise: sigma^2 = C(0) dt within 5%
        std::vector<double> w(100000);
        for (auto& v : w)
            v = rng.normal();
        auto const ew = autocovariance(w, 10, 1.0);
        auto const iw = integrated_autocovariance(ew);
        REQUIRE(iw.value);
        CHECK(iw.cutoff_lag == 1);
        CHECK(*iw.value == doctest::Approx(ew.value[0] + ew.value[1]).epsilon(1e-12));
        CHECK(*iw.value == doctest::Approx(1.0).epsilon(0.05));

        auto const div = integrated_autocovariance(est, 1, 1.5);
        CHECK_FALSE(div.value);
        CHECK(div.warning.find("diverges") != std::string::npos);
        CHECK(integrated_autocovariance(est, 3, 1.5).value);
        CHECK(integrated_autocovariance_finite(1, 0.5));
        CHECK_FALSE(integrated_autocovariance_finite(2, 2.0));
        CHECK(integrated_autocovariance_finite(3, 3.0));
    }

    TEST_CASE("jackknife variance")
    {
        std::vector<double> x{1, 2, 3, 4, 10};
        auto const [var, se] = jackknife_variance(x);
        CHECK(var == doctest::Approx(12.5).epsilon(1e-14));
        // delete-one recomputation
        double lbar = 0;
        std::vector<double> loo;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            std::vector<double> y;
            for (std::size_t j = 0; j < x.size(); ++j)
                if (j != i)
                    y.push_back(x[j]);
            double const m = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
            double ss = 0;
            for (double v : y)
                ss += (v - m) * (v - m);
            loo.push_back(ss / (y.size() - 1));
            lbar += loo.back() / x.size();
        }
        double ss = 0;
        for (double v : loo)
            ss += (v - lbar) * (v - lbar);
        CHECK(se == doctest::Approx(std::sqrt(4.0 / 5.0 * ss)).epsilon(1e-12));
    }

    TEST_CASE("variance scaling recovers manufactured exponents")
    {
        std::vector<double> const N{250, 500, 1000, 2000};
        auto coverage = [&](double slope, auto draw) {
            Rng rng(11);
            int covered = 0;
            int const reps = 200;
            for (int r = 0; r < reps; ++r)
            {
                std::vector<std::vector<double>> samples(N.size());
                for (std::size_t i = 0; i < N.size(); ++i)
                    for (int k = 0; k < 200; ++k)
                        samples[i].push_back(draw(rng, N[i]));
                auto const fit = variance_scaling(N, samples);
                covered += fit.ci_low <= slope && slope <= fit.ci_high;
            }
            return static_cast<double>(covered) / reps;
        };
        // sqrt(N) Z: Var = N
        double const c1 = coverage(1.0, [](Rng& rng, double n) {
            return std::sqrt(n) * rng.normal();
        });
        MESSAGE("coverage, slope 1: " << c1);
        CHECK(c1 >= 0.95);
        // fBm at time N with theta = 2/3: Var = N^{4/3}
        double const c2 = coverage(4.0 / 3, [](Rng& rng, double n) {
            FbmSampler const s(2.0 / 3, {n});
            return s.sample(rng)[0];
        });
        MESSAGE("coverage, slope 4/3: " << c2);
        CHECK(c2 >= 0.95);

        std::vector<std::vector<double>> few(3, std::vector<double>(200, 1.0));
        CHECK_THROWS_AS(variance_scaling(std::span(N.data(), 3), few),
                        ValidationError);
    }

    TEST_CASE("Kolmogorov-Smirnov calibration and power")
    {
        Rng rng(13);
        auto const Phi = [](double x) { return normal_cdf(x, 1.0); };
        int rejected = 0;
        for (int r = 0; r < 200; ++r)
        {
            std::vector<double> x(500);
            for (auto& v : x)
                v = rng.normal();
            rejected += ks_test(x, Phi).p_value < 0.05;
        }
        CHECK(std::abs(rejected / 200.0 - 0.05) <= 0.04);

        std::vector<double> x(500);
        for (auto& v : x)
            v = 1.3 * rng.normal();
        CHECK(ks_test(x, Phi).p_value < 0.01);
        CHECK(kolmogorov_tail(0.0) == 1.0);
        CHECK(kolmogorov_tail(1.36) == doctest::Approx(0.0494).epsilon(0.01));
        CHECK(normal_cdf(0.0, 4.0) == 0.5);
    }

    TEST_CASE("chi-square against a Poisson pmf")
    {
        Rng rng(17);
        boost::math::poisson_distribution<> pois(3.0);
        std::vector<double> pmf;
        for (int k = 0; k <= 15; ++k)
            pmf.push_back(boost::math::pdf(pois, k));
        int rejected = 0;
        for (int r = 0; r < 200; ++r)
        {
            std::vector<std::int64_t> counts(pmf.size(), 0);
            for (int i = 0; i < 2000; ++i)
            {
                // inversion
                double u = rng.uniform();
                std::size_t k = 0;
                while (k + 1 < pmf.size() && u >= pmf[k])
                    u -= pmf[k++];
                ++counts[k];
            }
            auto const res = chi_square(counts, pmf);
            CHECK(res.dof >= 5);
            rejected += res.p_value < 0.05;
        }
        CHECK(std::abs(rejected / 200.0 - 0.05) <= 0.04);

        std::vector<std::int64_t> skew(pmf.size(), 0);
        for (std::size_t k = 0; k < pmf.size(); ++k)
            skew[k] = std::llround(2000 * pmf[std::min(k + 1, pmf.size() - 1)]);
        CHECK(chi_square(skew, pmf).p_value < 1e-6);
    }

    TEST_CASE("law check on exact fBm samples")
    {
        Rng rng(19);
        std::vector<double> const times{0.5, 1.0};
        double const theta = 2.0 / 3, sigma = 1.3;
        FbmSampler const s(theta, times);
        std::vector<std::vector<double>> values;
        for (int r = 0; r < 1000; ++r)
        {
            auto v = s.sample(rng);
            for (auto& x : v)
                x *= sigma;
            values.push_back(v);
        }
        auto const ok = hurst_and_law_check(values, times, theta, sigma);
        CHECK(ok.pass);
        CHECK(ok.verdicts.size() >= 3);

        // Brownian data against an fBm(2/3) law
        FbmSampler const bm(0.5, times);
        std::vector<std::vector<double>> wrong;
        for (int r = 0; r < 2000; ++r)
            wrong.push_back(bm.sample(rng));
        CHECK_FALSE(hurst_and_law_check(wrong, times, theta, 1.0).pass);

        // raw overload divides by the normalizer
        auto const p = fugacity_of_density(1.0, RateFamily::linear(1.0));
        auto const law = theorem_coefficient(1, 1.5, p, ObservableSpec::occupation());
        double const N = 1000;
        std::vector<std::vector<double>> raw;
        for (int r = 0; r < 1000; ++r)
        {
            auto v = s.sample(rng);
            for (auto& x : v)
                x *= *law.scale * law.normalizer(N);
            raw.push_back(v);
        }
        CHECK(hurst_and_law_check(raw, times, N, law).pass);
    }
}
