#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "zrp/engine.hpp"
#include "zrp/error.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

namespace
{
ModelSpec small_spec(std::int64_t L, double alpha, RateFamily f)
{
    ModelSpec s;
    s.d = 1;
    s.alpha = alpha;
    s.L = L;
    s.rate_family = f;
    return s;
}

double brute_total_rate(Configuration const& c, ModelSpec const& spec)
{
    auto const& g = c.geometry();
    double s = 0;
    for (std::size_t x = 0; x < c.num_sites(); ++x)
        for (std::size_t y = 0; y < c.num_sites(); ++y)
            if (x != y)
                s += spec.rate_family(c[x])
                     * kernel_weight(g.displacement(x, y), spec);
    return s;
}

struct Counter final : Observer
{
    std::size_t holds = 0, jumps = 0;
    double held = 0;
    void hold(Configuration const&, double, double dt) override
    {
        ++holds;
        held += dt;
    }
    void jumped(Configuration const&, Event const&) override { ++jumps; }
};

constexpr SourceSelection both_modes[]
    = {SourceSelection::fenwick, SourceSelection::composition};
}  // namespace

TEST_SUITE("kmc_engine")
{
    TEST_CASE("weighted index against a linear scan")
    {
        Rng rng(1);
        std::vector<double> w(37);
        for (auto& x : w)
            x = std::floor(rng.uniform() * 5);
        WeightedIndex idx(w);
        for (int round = 0; round < 200; ++round)
        {
            auto const i = static_cast<std::size_t>(rng.uniform() * w.size());
            w[i] = std::floor(rng.uniform() * 5);
            idx.set(i, w[i]);
            double total = 0;
            for (double x : w)
                total += x;
            CHECK(idx.total() == doctest::Approx(total).epsilon(1e-14));
            double const u = rng.uniform() * total;
            std::size_t expect = 0;
            double acc = 0;
            while (acc + w[expect] <= u)
                acc += w[expect++];
            CHECK(idx.find(u) == expect);
            CHECK(idx.prefix(i) == doctest::Approx(
                      std::accumulate(w.begin(), w.begin() + i + 1, 0.0)));
        }
        idx.rebuild();
        CHECK(idx.total() == doctest::Approx(idx.recompute_total()));
    }

    TEST_CASE("total rate")
    {
        auto const spec = small_spec(4, 3.0, RateFamily::linear(1.0));
        DisplacementSampler ds(spec);
        Configuration empty(TorusGeometry(1, 4), spec.rate_family, {0, 0, 0, 0});
        CHECK(total_rate(empty, ds) == 0.0);
        Configuration one(TorusGeometry(1, 4), spec.rate_family, {1, 0, 0, 0});
        CHECK(total_rate(one, ds) == doctest::Approx(2.0625).epsilon(1e-14));

        Rng rng(5);
        for (std::int64_t L : {8, 16})
            for (auto f : {RateFamily::linear(1.0), RateFamily::affine(1.0, 0.5)})
                for (auto mode : both_modes)
                {
                    auto const sp = small_spec(L, 1.5, f);
                    DisplacementSampler d2(sp);
                    std::vector<std::int32_t> occ(L);
                    for (auto& k : occ)
                        k = static_cast<std::int32_t>(rng.uniform() * 4);
                    Configuration c(TorusGeometry(1, L), f, occ, 0.0, mode);
                    double const b = brute_total_rate(c, sp);
                    CHECK(std::abs(total_rate(c, d2) - b) <= 1e-9 * b);
                }
    }

    TEST_CASE("source with a single positive rate")
    {
        for (auto mode : both_modes)
        {
            Configuration c(TorusGeometry(1, 2), RateFamily::linear(1.0),
                            {1, 0}, 0.0, mode);
            Rng rng(2);
            for (int i = 0; i < 100; ++i)
                CHECK(c.draw_source(rng) == 0);
        }
    }

    TEST_CASE("source law matches c(eta(x)) / sum c in both modes")
    {
        std::vector<std::int32_t> occ{0, 3, 1, 0, 2, 5, 1, 0};
        auto const f = RateFamily::affine(1.0, 0.5);
        std::vector<double> pmf;
        double tot = 0;
        for (auto k : occ)
            tot += f(k);
        for (auto k : occ)
            pmf.push_back(f(k) / tot);
        for (auto mode : both_modes)
        {
            Configuration c(TorusGeometry(1, 8), f, occ, 0.0, mode);
            CHECK(c.rate_sum() == doctest::Approx(tot).epsilon(1e-15));
            Rng rng(11);
            std::vector<std::int64_t> counts(8, 0);
            for (int i = 0; i < 200000; ++i)
                ++counts[c.draw_source(rng)];
            // empty sites never fire; drop them before the chi-square
            std::vector<std::int64_t> cc;
            std::vector<double> pp;
            for (std::size_t x = 0; x < 8; ++x)
            {
                if (pmf[x] == 0)
                {
                    CHECK(counts[x] == 0);
                    continue;
                }
                cc.push_back(counts[x]);
                pp.push_back(pmf[x]);
            }
            CHECK(chi_square(cc, pp).p_value > 1e-3);
        }
    }

    TEST_CASE("generator frequencies on L=4 with two particles")
    {
        // Exact rates between the 10 two-particle states, by enumeration.
        struct Variant
        {
            RateFamily f;
            SourceSelection mode;
        };
        for (auto const& [f, mode] :
             {Variant{RateFamily::linear(1.0), SourceSelection::fenwick},
              Variant{RateFamily::affine(1.0, 0.5),
                      SourceSelection::composition}})
        {
            auto const spec = small_spec(4, 1.5, f);
            DisplacementSampler ds(spec);
            TorusGeometry g(1, 4);
            auto key = [](Configuration const& c) {
                int k = 0;
                for (std::size_t x = 0; x < 4; ++x)
                    k = k * 3 + c[x];
                return k;
            };
            std::vector<double> exact(81 * 81, 0.0);
            for (int a = 0; a < 4; ++a)
                for (int b = a; b < 4; ++b)
                {
                    std::vector<std::int32_t> o(4, 0);
                    ++o[a];
                    ++o[b];
                    int const k = key(Configuration(g, f, o));
                    for (std::size_t x = 0; x < 4; ++x)
                        for (std::size_t y = 0; y < 4; ++y)
                        {
                            if (x == y || o[x] == 0)
                                continue;
                            auto o2 = o;
                            --o2[x];
                            ++o2[y];
                            exact[k * 81 + key(Configuration(g, f, o2))]
                                += f(o[x])
                                   * kernel_weight(g.displacement(x, y), spec);
                        }
                }

            Configuration c(g, f, {1, 1, 0, 0}, 0.0, mode);
            Rng rng(77);
            std::vector<double> time_in(81, 0.0), jumps(81 * 81, 0.0);
            for (int i = 0; i < 16000000; ++i)
            {
                int const from = key(c);
                auto const ev = step(c, ds, rng);
                time_in[from] += ev.time_increment;
                jumps[from * 81 + key(c)] += 1;
            }
            double worst = 0;
            for (int tr = 0; tr < 81 * 81; ++tr)
            {
                if (exact[tr] == 0)
                {
                    CHECK(jumps[tr] == 0);
                    continue;
                }
                double const emp = jumps[tr] / time_in[tr / 81];
                worst = std::max(worst, std::abs(emp - exact[tr]) / exact[tr]);
            }
            CHECK(worst < 0.02);
            CHECK(c.audit());
        }
    }

    TEST_CASE("conservation and audit over many events")
    {
        for (auto mode : both_modes)
            for (auto f : {RateFamily::linear(1.0), RateFamily::affine(1.0, 0.5)})
            {
                auto const spec = small_spec(64, 1.5, f);
                auto const p = fugacity_of_density(1.0, f);
                Rng rng(123);
                auto c = sample_configuration(rng, spec, p, mode);
                auto const n0 = c.total_particles();
                DisplacementSampler ds(spec);
                for (int i = 0; i < 200000; ++i)
                    step(c, ds, rng);
                std::int64_t n = 0;
                for (auto k : c.occupancy())
                {
                    CHECK(k >= 0);
                    n += k;
                }
                CHECK(n == n0);
                CHECK(c.total_particles() == n0);
                CHECK(c.audit());
                CHECK(c.rate_sum()
                      == doctest::Approx(c.recompute_rate_sum()).epsilon(1e-9));
            }
    }

    TEST_CASE("moving from an empty site is rejected")
    {
        Configuration c(TorusGeometry(1, 4), RateFamily::linear(1.0),
                        {0, 1, 0, 0});
        CHECK_THROWS_AS(c.move_particle(0, 1), ValidationError);
    }

    TEST_CASE("stationarity of the single-site marginal")
    {
        auto const spec = small_spec(16, 1.5, RateFamily::affine(1.0, 0.5));
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        DisplacementSampler ds(spec);
        std::vector<std::int64_t> counts(p.pmf.size(), 0);
        for (int r = 0; r < 2000; ++r)
        {
            Rng rng(derive_seed(31, r));
            auto c = sample_configuration(rng, spec, p,
                                          SourceSelection::composition);
            for (int i = 0; i < 10000; ++i)
                step(c, ds, rng);
            auto const k = static_cast<std::size_t>(c[0]);
            if (k >= counts.size())
                counts.resize(k + 1, 0);
            ++counts[k];
        }
        CHECK(chi_square(counts, p.pmf).p_value > 1e-3);
    }

    TEST_CASE("advance_until edge cases and determinism")
    {
        auto const spec = small_spec(32, 1.5, RateFamily::linear(1.0));
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        DisplacementSampler ds(spec);
        {
            Rng rng(4);
            auto c = sample_configuration(rng, spec, p);
            Counter obs;
            Observer* list[] = {&obs};
            auto const r = advance_until(c, ds, 0.0, list, rng);
            CHECK(r.events == 0);
            CHECK(obs.holds == 1);
            CHECK(obs.held == 0.0);
            CHECK_THROWS_AS(advance_until(c, ds, -1.0, {}, rng), ValidationError);
        }
        auto run = [&](std::uint64_t seed) {
            Rng rng(seed);
            auto c = sample_configuration(rng, spec, p);
            std::vector<std::size_t> trace;
            for (int i = 0; i < 1000; ++i)
            {
                auto const ev = step(c, ds, rng);
                trace.push_back(ev.source * 1000 + ev.destination);
            }
            return trace;
        };
        CHECK(run(8) == run(8));
        CHECK(run(8) != run(9));

        Configuration empty(TorusGeometry(1, 32), spec.rate_family,
                            std::vector<std::int32_t>(32, 0));
        Rng rng(1);
        CHECK_THROWS_AS(advance_until(empty, ds, 1.0, {}, rng), StallError);
        CHECK_THROWS_AS(step(empty, ds, rng), StallError);
    }

    TEST_CASE("event count of a single particle is Poisson")
    {
        auto const spec = small_spec(32, 1.5, RateFamily::linear(1.0));
        DisplacementSampler ds(spec);
        double const T = 20;
        double const mean = ds.mass() * T;
        int const R = 4000;
        double s = 0;
        for (int r = 0; r < R; ++r)
        {
            Rng rng(derive_seed(2, r));
            std::vector<std::int32_t> occ(32, 0);
            occ[5] = 1;
            Configuration c(TorusGeometry(1, 32), spec.rate_family, occ);
            s += static_cast<double>(advance_until(c, ds, T, {}, rng).events);
        }
        CHECK(std::abs(s / R - mean) < 4 * std::sqrt(mean / R));
    }

    TEST_CASE("checkpoint round trip")
    {
        auto const spec = small_spec(32, 1.5, RateFamily::affine(1.0, 0.5));
        auto const p = fugacity_of_density(1.0, spec.rate_family);
        Rng rng(6);
        auto c = sample_configuration(rng, spec, p);
        DisplacementSampler ds(spec);
        for (int i = 0; i < 100; ++i)
            step(c, ds, rng);
        std::stringstream ss;
        write_checkpoint(ss, c);
        auto const back = read_checkpoint(ss, spec.rate_family);
        CHECK(back.sim_time() == c.sim_time());
        CHECK(std::equal(back.occupancy().begin(), back.occupancy().end(),
                         c.occupancy().begin(), c.occupancy().end()));
        CHECK(back.audit());
        std::stringstream bad("\x07");
        CHECK_THROWS_AS(read_checkpoint(bad, spec.rate_family), ParseError);
    }

    TEST_CASE("displacement sampler law")
    {
        auto const spec = small_spec(16, 1.0, RateFamily::linear(1.0));
        DisplacementSampler ds(spec);
        CHECK(ds.mass() == doctest::Approx(kernel_mass(spec)).epsilon(1e-14));
        Rng rng(10);
        std::vector<std::int64_t> counts(16, 0);
        for (int i = 0; i < 200000; ++i)
            ++counts[ds.sample(rng)];
        CHECK(counts[0] == 0);
        std::vector<std::int64_t> cc(counts.begin() + 1, counts.end());
        std::vector<double> pp;
        for (std::size_t j = 1; j < 16; ++j)
            pp.push_back(ds.probability(j));
        CHECK(chi_square(cc, pp).p_value > 1e-3);
    }
}
