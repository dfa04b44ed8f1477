#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "zrp/error.hpp"
#include "zrp/observable.hpp"
#include "zrp/recorder.hpp"

using namespace zrp;

namespace
{
std::size_t offset_index(ObservableSpec const& obs, std::int64_t x)
{
    auto const& offs = obs.window_offsets();
    for (std::size_t i = 0; i < offs.size(); ++i)
        if (offs[i][0] == x)
            return i;
    FAIL("offset not in window");
    return 0;
}

ObservableSpec pair_product(EquilibriumProfile const& p)
{
    auto const offs = window_offsets(1, 1.0);
    std::size_t i0 = 0, i1 = 0;
    for (std::size_t i = 0; i < offs.size(); ++i)
    {
        if (offs[i][0] == 0)
            i0 = i;
        if (offs[i][0] == 1)
            i1 = i;
    }
    return ObservableSpec::window_custom(
        1, 1.0, 14, 2.0,
        [i0, i1](std::span<std::int32_t const> w) {
            return static_cast<double>(w[i0]) * w[i1];
        },
        p);
}
}  // namespace

TEST_SUITE("functional_recorder")
{
    TEST_CASE("observable values")
    {
        auto const p = fugacity_of_density(1.0, RateFamily::linear(1.0));
        auto const occ = ObservableSpec::occupation();
        std::vector<std::int32_t> three{3};
        CHECK(evaluate_observable(occ, three, p) == 2.0);
        std::vector<std::int32_t> zero{0};
        CHECK(evaluate_observable(ObservableSpec::rate_centered(), zero, p)
              == doctest::Approx(-1.0).epsilon(1e-12));

        auto const pp = pair_product(p);
        CHECK(pp.vbar() == 0.0);
        std::vector<std::int32_t> w(pp.window_size(), 0);
        w[offset_index(pp, 0)] = 2;
        w[offset_index(pp, 1)] = 3;
        w[offset_index(pp, -1)] = 5;  // outside the support of V
        CHECK(evaluate_observable(pp, w, p)
              == doctest::Approx(6.0 - 1.0).epsilon(1e-9));

        CHECK(vbar_prime_of(occ, p) == 1.0);
        CHECK(vbar_prime_of(ObservableSpec::rate_centered(), p)
              == doctest::Approx(1.0).epsilon(1e-9));
        // d/dgamma of gamma^2 at gamma = 1
        CHECK(vbar_prime_of(pp, p) == doctest::Approx(2.0).epsilon(1e-6));

        CHECK(window_offsets(2, 1.0).size() == 5);
        CHECK(window_offsets(2, std::sqrt(2.0)).size() == 9);
        CHECK_THROWS_AS(observable_kind_from_string("banana"), ParseError);
    }

    TEST_CASE("window table cap is enforced")
    {
        auto const p = fugacity_of_density(1.0, RateFamily::linear(1.0));
        auto const pp = pair_product(p);
        std::vector<std::int32_t> w(pp.window_size(), 15);
        CHECK_THROWS_AS(evaluate_observable(pp, w, p), ValidationError);
        // a cap that leaves equilibrium mass untabulated is refused
        CHECK_THROWS_AS(ObservableSpec::window_custom(
                            1, 0.0, 1, 1.0,
                            [](std::span<std::int32_t const> v) {
                                return double(v[0]);
                            },
                            p),
                        ValidationError);
    }

    TEST_CASE("path accumulator on step functions")
    {
        {
            PathAccumulator acc({5.0});
            acc.accumulate(1.0, 5.0);
            CHECK(acc.path().values.at(0) == 5.0);
        }
        {
            PathAccumulator acc({2.0});
            acc.accumulate(1.0, 1.0);
            acc.accumulate(-1.0, 1.0);
            CHECK(acc.path().values.at(0) == 0.0);
        }
        {
            Rng rng(3);
            std::vector<double> v(1000), dt(1000);
            long double exact = 0;
            double T = 0;
            for (int i = 0; i < 1000; ++i)
            {
                v[i] = rng.uniform() * 2 - 1;
                dt[i] = rng.uniform();
                exact += static_cast<long double>(v[i]) * dt[i];
                T += dt[i];
            }
            PathAccumulator acc({T * 0.5, T});
            for (int i = 0; i < 1000; ++i)
                acc.accumulate(v[i], dt[i]);
            auto const path = acc.path();
            REQUIRE(path.values.size() == 2);
            CHECK(std::abs(path.values[1] - static_cast<double>(exact))
                  <= 1e-12 * std::abs(static_cast<double>(exact)) + 1e-15);
        }
        CHECK_THROWS_AS(PathAccumulator({2.0, 1.0}), ValidationError);
        PathAccumulator acc({1.0});
        CHECK_THROWS_AS(acc.accumulate(1.0, -1.0), ValidationError);
    }

    TEST_CASE("constant observable integrates to zero")
    {
        ModelSpec spec;
        spec.L = 16;
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        auto const flat = ObservableSpec::window_custom(
            1, 0.0, 14, 0.0, [](std::span<std::int32_t const>) { return 1.0; },
            p);
        Rng rng(5);
        auto const path = record_functional(spec, p, flat, {1, 2, 5}, rng);
        // only the untabulated tail mass (< 1e-12) survives the centering
        for (double a : path.values)
            CHECK(std::abs(a) < 1e-10);
    }

    TEST_CASE("window-touch optimization is bit-identical")
    {
        ModelSpec spec;
        spec.L = 32;
        spec.rate_family = RateFamily::affine(1.0, 0.5);
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        for (auto const& obs : {ObservableSpec::occupation(),
                                ObservableSpec::rate_centered(), pair_product(p)})
        {
            Rng r1(99), r2(99);
            RecorderOptions full;
            full.full_reevaluation = true;
            auto const a = record_functional(spec, p, obs, {1, 5, 20}, r1);
            auto const b = record_functional(spec, p, obs, {1, 5, 20}, r2, full);
            CHECK(a.values == b.values);
        }
    }

    TEST_CASE("stationary mean of A is zero")
    {
        ModelSpec spec;
        spec.L = 64;
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        DisplacementSampler ds(spec);
        double s = 0, s2 = 0;
        int const R = 200;
        for (int r = 0; r < R; ++r)
        {
            Rng rng(derive_seed(12, r));
            auto const path = record_functional(
                spec, p, ObservableSpec::occupation(), {50.0}, rng, {}, &ds);
            s += path.values[0];
            s2 += path.values[0] * path.values[0];
        }
        double const m = s / R;
        double const se = std::sqrt((s2 / R - m * m) / (R - 1));
        CHECK(std::abs(m) < 4 * se);
    }

    TEST_CASE("Ehrenfest variance against the matrix exponential")
    {
        // Independent walkers: Cov(eta_0(0), eta_s(0)) = gamma P_s(0,0), so
        // Var A(T) = 2 gamma sum_k v_k(0)^2 (e^{l_k T} - 1 - l_k T) / l_k^2.
        ModelSpec spec;
        spec.L = 8;
        spec.alpha = 1.5;
        double const gamma = 1.0, T = 10.0;
        DisplacementSampler ds(spec);
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(8, 8);
        for (std::size_t x = 0; x < 8; ++x)
            for (std::size_t j = 1; j < ds.num_displacements(); ++j)
            {
                auto const y = ds.destination(x, j);
                Q(x, y) += ds.weight(j);
                Q(x, x) -= ds.weight(j);
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
        double exact = 0;
        for (int k = 0; k < 8; ++k)
        {
            double const l = es.eigenvalues()(k);
            double const v2 = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
            double const g = std::abs(l) < 1e-12
                                 ? T * T / 2
                                 : (std::exp(l * T) - 1 - l * T) / (l * l);
            exact += 2 * gamma * v2 * g;
        }

        auto const p = fugacity_of_density(gamma, spec.rate_family);
        int const R = 20000;
        std::vector<double> a(R);
        for (int r = 0; r < R; ++r)
        {
            Rng rng(derive_seed(21, r));
            try
            {
                a[r] = record_functional(spec, p, ObservableSpec::occupation(),
                                         {T}, rng, {}, &ds)
                           .values[0];
            }
            catch (StallError const&)
            {
                // empty torus: nothing moves and eta(0) - gamma = -gamma
                a[r] = -gamma * T;
            }
        }
        double m = 0;
        for (double x : a)
            m += x;
        m /= R;
        double v = 0, v4 = 0;
        for (double x : a)
        {
            v += (x - m) * (x - m);
        }
        v /= R - 1;
        for (double x : a)
            v4 += std::pow((x - m) * (x - m) - v, 2);
        double const se = std::sqrt(v4 / (R - 1) / R);
        CHECK(std::abs(v - exact) < 3 * se);
    }

    TEST_CASE("realized-density centering is occupation only")
    {
        ModelSpec spec;
        spec.L = 16;
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        RecorderOptions o;
        o.centering = Centering::realized_density;
        CHECK_THROWS_AS(FunctionalRecorder(ObservableSpec::rate_centered(), p,
                                           TorusGeometry(1, 16), {1.0}, o),
                        ValidationError);
        Rng rng(8);
        auto const path = record_functional(spec, p, ObservableSpec::occupation(),
                                            {1.0, 2.0}, rng, o);
        CHECK(path.values.size() == 2);
    }

    TEST_CASE("paths csv layout")
    {
        FunctionalPath a{{1, 2}, {0.5, -0.25}, true};
        std::ostringstream os;
        write_paths_csv(os, {a, a});
        CHECK(os.str()
              == "replica,t,A\n0,1,0.5\n0,2,-0.25\n1,1,0.5\n1,2,-0.25\n");
    }
}
