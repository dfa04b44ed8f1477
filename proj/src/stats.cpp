//! \file stats.cpp
#include "zrp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "zrp/error.hpp"

namespace zrp
{
//---------------------------------------------------------------------------//
AutocovAccumulator::AutocovAccumulator(std::size_t channels,
                                       std::size_t max_lag,
                                       std::size_t samples_per_batch)
    : channels_(channels),
      max_lag_(max_lag),
      per_batch_(samples_per_batch),
      ring_(max_lag + 1, std::vector<double>(channels, 0.0))
{
    if (channels == 0 || samples_per_batch == 0)
        throw ValidationError("autocovariance needs channels and batch size");
}

AutocovAccumulator::Batch& AutocovAccumulator::current_batch()
{
    if (batches_.empty() || batches_.back().samples >= per_batch_)
    {
        Batch b;
        b.sxx.assign(max_lag_ + 1, 0.0);
        b.sa.assign(max_lag_ + 1, 0.0);
        b.sb.assign(max_lag_ + 1, 0.0);
        b.pairs.assign(max_lag_ + 1, 0.0);
        batches_.push_back(std::move(b));
    }
    return batches_.back();
}

void AutocovAccumulator::push(std::span<double const> snapshot)
{
    if (snapshot.size() != channels_)
        throw ValidationError("snapshot width differs from channel count");
    auto& slot = ring_[samples_ % (max_lag_ + 1)];
    std::copy(snapshot.begin(), snapshot.end(), slot.begin());
    double const sx = std::accumulate(snapshot.begin(), snapshot.end(), 0.0);

    Batch& b = current_batch();
    ++b.samples;
    b.sum += sx;
    std::size_t const lags = std::min(samples_, max_lag_);
    for (std::size_t l = 0; l <= lags; ++l)
    {
        auto const& prev = ring_[(samples_ - l) % (max_lag_ + 1)];
        double dot = 0, sp = 0;
        for (std::size_t c = 0; c < channels_; ++c)
        {
            dot += prev[c] * snapshot[c];
            sp += prev[c];
        }
        b.sxx[l] += dot;
        b.sa[l] += sp;
        b.sb[l] += sx;
        b.pairs[l] += static_cast<double>(channels_);
    }
    ++samples_;
}

void AutocovAccumulator::merge(AutocovAccumulator const& other)
{
    if (other.channels_ != channels_ || other.max_lag_ != max_lag_)
        throw ValidationError("cannot merge autocovariances of different shape");
    batches_.insert(batches_.end(), other.batches_.begin(),
                    other.batches_.end());
    samples_ += other.samples_;
}

AutocovEstimate AutocovAccumulator::finish(double dt) const
{
    AutocovEstimate est;
    est.dt = dt;
    est.channels = channels_;
    std::size_t n = 0;
    double total = 0;
    for (auto const& b : batches_)
    {
        n += b.samples;
        total += b.sum;
    }
    est.samples = n;
    if (n == 0)
        throw ValidationError("autocovariance of an empty series");
    double const ch = static_cast<double>(channels_);
    double const m = total / (static_cast<double>(n) * ch);
    est.mean = m;

    auto centered = [m](Batch const& b, std::size_t l) {
        return b.sxx[l] - m * (b.sa[l] + b.sb[l]) + b.pairs[l] * m * m;
    };
    est.value.assign(max_lag_ + 1, 0.0);
    for (std::size_t l = 0; l <= max_lag_; ++l)
    {
        double s = 0;
        for (auto const& b : batches_)
            s += centered(b, l);
        est.value[l] = s / (static_cast<double>(n) * ch);
    }
    for (auto const& b : batches_)
    {
        if (2 * b.samples < per_batch_)
            continue;
        std::vector<double> v(max_lag_ + 1);
        for (std::size_t l = 0; l <= max_lag_; ++l)
            v[l] = centered(b, l) / (static_cast<double>(b.samples) * ch);
        est.batch_values.push_back(std::move(v));
    }
    est.batches = est.batch_values.size();
    est.se.assign(max_lag_ + 1, 0.0);
    if (est.batches >= 2)
    {
        double const B = static_cast<double>(est.batches);
        for (std::size_t l = 0; l <= max_lag_; ++l)
        {
            double mean = 0;
            for (auto const& v : est.batch_values)
                mean += v[l];
            mean /= B;
            double ss = 0;
            for (auto const& v : est.batch_values)
                ss += (v[l] - mean) * (v[l] - mean);
            est.se[l] = std::sqrt(ss / (B - 1) / B);
        }
    }
    return est;
}

AutocovEstimate autocovariance(std::span<double const> series,
                               std::size_t max_lag,
                               double dt,
                               std::size_t batches)
{
    if (series.size() < 2 * max_lag || series.empty())
        throw ValidationError(fmt::format(
            "series of length {} is shorter than 2 * max_lag = {}",
            series.size(), 2 * max_lag));
    std::size_t const per = (series.size() + batches - 1) / batches;
    AutocovAccumulator acc(1, max_lag, std::max<std::size_t>(per, 1));
    for (double x : series)
        acc.push(std::span<double const>(&x, 1));
    return acc.finish(dt);
}

bool integrated_autocovariance_finite(int d, double alpha)
{
    if (d == 1)
        return alpha < 1;
    if (d == 2)
        return alpha < 2;
    return true;
}

namespace
{
double trapezoid(std::vector<double> const& c, std::size_t upto, double dt)
{
    if (upto == 0)
        return 0.0;
    double s = 0.5 * (c[0] + c[upto]);
    for (std::size_t l = 1; l < upto; ++l)
        s += c[l];
    return s * dt;
}
}  // namespace

IntegratedAutocov integrated_autocovariance(AutocovEstimate const& est)
{
    IntegratedAutocov out;
    std::size_t const max_lag = est.value.size() - 1;
    std::size_t cutoff = max_lag;
    bool crossed = false;
    for (std::size_t l = 1; l <= max_lag; ++l)
    {
        if (est.value[l] < 2.0 * est.se[l])
        {
            cutoff = l;
            crossed = true;
            break;
        }
    }
    if (!crossed)
        out.warning = "autocovariance still significant at the largest lag";
    out.cutoff_lag = cutoff;
    out.value = 2.0 * trapezoid(est.value, cutoff, est.dt);
    if (est.batch_values.size() >= 2)
    {
        std::vector<double> per;
        for (auto const& v : est.batch_values)
            per.push_back(2.0 * trapezoid(v, cutoff, est.dt));
        double const B = static_cast<double>(per.size());
        double const mean = std::accumulate(per.begin(), per.end(), 0.0) / B;
        double ss = 0;
        for (double x : per)
            ss += (x - mean) * (x - mean);
        out.se = std::sqrt(ss / (B - 1) / B);
    }
    return out;
}

IntegratedAutocov
integrated_autocovariance(AutocovEstimate const& est, int d, double alpha)
{
    if (!integrated_autocovariance_finite(d, alpha))
    {
        IntegratedAutocov out;
        out.warning = fmt::format(
            "sigma^2 = 2 int C diverges for d={}, alpha={}; no value returned",
            d, alpha);
        return out;
    }
    return integrated_autocovariance(est);
}

//---------------------------------------------------------------------------//
std::pair<double, double> jackknife_variance(std::span<double const> xs)
{
    std::size_t const n = xs.size();
    if (n < 3)
        throw ValidationError("jackknife variance needs at least 3 samples");
    double const mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double s1 = 0, s2 = 0;
    for (double x : xs)
    {
        s1 += x - mean;
        s2 += (x - mean) * (x - mean);
    }
    double const dn = static_cast<double>(n);
    double const var = (s2 - s1 * s1 / dn) / (dn - 1);
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double const y = xs[i] - mean;
        double const a = s1 - y, b = s2 - y * y;
        loo[i] = (b - a * a / (dn - 1)) / (dn - 2);
    }
    double const lbar = std::accumulate(loo.begin(), loo.end(), 0.0) / dn;
    double ss = 0;
    for (double v : loo)
        ss += (v - lbar) * (v - lbar);
    return {var, std::sqrt((dn - 1) / dn * ss)};
}

ScalingFit variance_scaling(std::span<double const> N,
                            std::vector<std::vector<double>> const& samples)
{
    if (N.size() != samples.size())
        throw ValidationError("N grid and sample sets differ in length");
    if (N.size() < 4)
        throw ValidationError(fmt::format(
            "variance scaling needs at least 4 values of N, got {}", N.size()));
    ScalingFit fit;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < N.size(); ++i)
    {
        if (samples[i].size() < 100)
            throw ValidationError(fmt::format(
                "variance scaling needs >= 100 replicas per N, got {} at N={}",
                samples[i].size(), N[i]));
        auto const [var, se] = jackknife_variance(samples[i]);
        if (!(var > 0) || !(se > 0))
            throw ValidationError(
                fmt::format("degenerate variance at N={}", N[i]));
        fit.N.push_back(N[i]);
        fit.variance.push_back(var);
        fit.se.push_back(se);
        double const x = std::log(N[i]), y = std::log(var);
        double const sy_rel = se / var;
        double const w = 1.0 / (sy_rel * sy_rel);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    double const delta = sw * sxx - sx * sx;
    fit.slope = (sw * sxy - sx * sy) / delta;
    fit.intercept = (sxx * sy - sx * sxy) / delta;
    fit.slope_se = std::sqrt(sw / delta);
    fit.ci_low = fit.slope - 1.96 * fit.slope_se;
    fit.ci_high = fit.slope + 1.96 * fit.slope_se;
    return fit;
}

//---------------------------------------------------------------------------//
double kolmogorov_tail(double lambda)
{
    if (lambda <= 0)
        return 1.0;
    constexpr double pi = std::numbers::pi;
    if (lambda < 1.18)
    {
        double s = 0;
        for (int j = 1; j < 50; ++j)
        {
            double const k = 2.0 * j - 1.0;
            s += std::exp(-k * k * pi * pi / (8.0 * lambda * lambda));
        }
        return std::clamp(1.0 - std::sqrt(2 * pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0;
    for (int j = 1; j < 100; ++j)
    {
        double const term = std::exp(-2.0 * j * j * lambda * lambda);
        s += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-300)
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

TestResult ks_test(std::span<double const> samples,
                   std::function<double(double)> const& cdf)
{
    std::size_t const n = samples.size();
    if (n < 50)
        throw ValidationError(
            fmt::format("KS test needs at least 50 samples, got {}", n));
    std::vector<double> xs(samples.begin(), samples.end());
    std::sort(xs.begin(), xs.end());
    double const dn = static_cast<double>(n);
    double d = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double const f = cdf(xs[i]);
        d = std::max({d, (i + 1) / dn - f, f - i / dn});
    }
    double const rn = std::sqrt(dn);
    TestResult r;
    r.statistic = d;
    r.p_value = kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d);
    return r;
}

double normal_cdf(double x, double variance)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

TestResult chi_square(std::span<std::int64_t const> counts,
                      std::span<double const> pmf)
{
    std::size_t const K = std::max(counts.size(), pmf.size());
    double n = 0;
    for (auto c : counts)
        n += static_cast<double>(c);
    if (!(n > 0))
        throw ValidationError("chi-square test with no observations");
    std::vector<double> obs(K, 0.0), expd(K, 0.0);
    double mass = 0;
    for (std::size_t k = 0; k < K; ++k)
    {
        obs[k] = k < counts.size() ? static_cast<double>(counts[k]) : 0.0;
        if (k + 1 < K)
        {
            double const p = k < pmf.size() ? pmf[k] : 0.0;
            expd[k] = n * p;
            mass += p;
        }
    }
    expd[K - 1] = n * std::max(0.0, 1.0 - mass);

    std::vector<double> mo, me;
    double ao = 0, ae = 0;
    for (std::size_t k = 0; k < K; ++k)
    {
        ao += obs[k];
        ae += expd[k];
        if (ae >= 5.0)
        {
            mo.push_back(ao);
            me.push_back(ae);
            ao = ae = 0;
        }
    }
    if (ae > 0 || ao > 0)
    {
        if (me.empty())
            throw ValidationError("chi-square bin merge failure: total "
                                  "expected count below 5");
        mo.back() += ao;
        me.back() += ae;
    }
    if (me.size() < 2)
        throw ValidationError(
            "chi-square bin merge failure: fewer than 2 classes remain");
    TestResult r;
    for (std::size_t i = 0; i < me.size(); ++i)
        r.statistic += (mo[i] - me[i]) * (mo[i] - me[i]) / me[i];
    r.dof = me.size() - 1;
    r.p_value = boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic);
    return r;
}

//---------------------------------------------------------------------------//
nlohmann::json to_json(Verdict const& v)
{
    return {{"check", v.check},       {"target", v.target},
            {"estimate", v.estimate}, {"se", v.se},
            {"tolerance", v.tolerance}, {"pass", v.pass}};
}

LawReport hurst_and_law_check(std::vector<std::vector<double>> const& values,
                              std::span<double const> times,
                              double theta,
                              double sigma,
                              LawCheckOptions const& options)
{
    std::size_t const R = values.size();
    std::size_t const m = times.size();
    if (R < 100)
        throw ValidationError(
            fmt::format("law check needs at least 100 replicas, got {}", R));
    for (auto const& row : values)
        if (row.size() != m)
            throw ValidationError("replica row length differs from time grid");
    LawReport report;
    double const level = options.ks_level / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j)
    {
        std::vector<double> col(R);
        for (std::size_t r = 0; r < R; ++r)
            col[r] = values[r][j];
        double const var = sigma * sigma * std::pow(times[j], 2 * theta);
        auto const ks = ks_test(col, [var](double x) { return normal_cdf(x, var); });
        Verdict v;
        v.check = fmt::format("ks_normal t={}", times[j]);
        v.target = var;
        v.estimate = ks.p_value;
        v.se = ks.statistic;
        v.tolerance = level;
        v.pass = ks.p_value > level;
        report.verdicts.push_back(v);
    }
    double const dR = static_cast<double>(R);
    for (std::size_t i = 0; i < m; ++i)
    {
        for (std::size_t j = i; j < m; ++j)
        {
            double s = 0, s2 = 0;
            for (std::size_t r = 0; r < R; ++r)
            {
                double const p = values[r][i] * values[r][j];
                s += p;
                s2 += p * p;
            }
            double const mean = s / dR;
            double const se
                = std::sqrt(std::max(0.0, s2 / dR - mean * mean) / (dR - 1));
            Verdict v;
            v.check = fmt::format("cov t={},{}", times[i], times[j]);
            v.target
                = sigma * sigma * fbm_covariance(theta, times[i], times[j]);
            v.estimate = mean;
            v.se = se;
            v.tolerance = options.cov_se * se;
            v.pass = std::abs(mean - v.target) <= v.tolerance;
            report.verdicts.push_back(v);
        }
    }
    report.pass = std::all_of(report.verdicts.begin(), report.verdicts.end(),
                              [](Verdict const& v) { return v.pass; });
    return report;
}

LawReport hurst_and_law_check(std::vector<std::vector<double>> const& raw,
                              std::span<double const> times,
                              double N,
                              LimitLaw const& law,
                              std::optional<double> measured_sigma,
                              LawCheckOptions const& options)
{
    double sigma;
    if (law.scale)
        sigma = *law.scale;
    else if (measured_sigma)
        sigma = *measured_sigma;
    else
        throw ValidationError(
            "limit law has a measured sigma but no estimate was supplied");
    double const lambda = law.normalizer(N);
    auto scaled = raw;
    for (auto& row : scaled)
        for (auto& x : row)
            x /= lambda;
    return hurst_and_law_check(scaled, times, law.hurst, sigma, options);
}
}  // namespace zrp
