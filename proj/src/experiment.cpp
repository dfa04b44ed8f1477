//! \file experiment.cpp
#include "zrp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "zrp/error.hpp"
#include "zrp/stable.hpp"
#include "zrp/walk.hpp"

namespace zrp
{
namespace fs = std::filesystem;
using nlohmann::json;

//---------------------------------------------------------------------------//
void parallel_for(std::size_t count,
                  unsigned workers,
                  std::function<void(std::size_t)> const& fn)
{
    workers = std::max(1u, std::min<unsigned>(
                               workers, static_cast<unsigned>(count)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (;;)
        {
            std::size_t const i = next.fetch_add(1);
            if (i >= count || failed.load())
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    if (workers <= 1)
    {
        work();
    }
    else
    {
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < workers; ++w)
            threads.emplace_back(work);
        for (auto& th : threads)
            th.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

//---------------------------------------------------------------------------//
std::vector<double> Ensemble::column(std::size_t iN, std::size_t jt) const
{
    std::vector<double> out(A.size());
    for (std::size_t r = 0; r < A.size(); ++r)
        out[r] = at(r, iN, jt);
    return out;
}

namespace
{
std::vector<std::size_t> strided_sites(std::size_t n, std::size_t stride)
{
    std::vector<std::size_t> sites;
    for (std::size_t x = 0; x < n; x += std::max<std::size_t>(stride, 1))
        sites.push_back(x);
    return sites;
}

std::size_t samples_per_batch(double horizon,
                              AutocovSettings const& s)
{
    double const n = std::floor((horizon - s.burn_in) / s.dt);
    auto const total = static_cast<std::size_t>(std::max(1.0, n));
    std::size_t const b = std::max<std::size_t>(1, s.batches_per_replica);
    return std::max<std::size_t>(1, (total + b - 1) / b);
}
}  // namespace

Ensemble run_ensemble(EnsembleSpec const& spec)
{
    spec.model.validate();
    if (spec.N_grid.empty() || spec.t_grid.empty())
        throw ValidationError("ensemble needs non-empty N and t grids");
    Ensemble ens;
    ens.N_grid = spec.N_grid;
    ens.t_grid = spec.t_grid;

    std::vector<double> times;
    for (double N : spec.N_grid)
        for (double t : spec.t_grid)
            times.push_back(t * N);
    std::vector<double> grid = times;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<std::size_t> slot(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        slot[i] = static_cast<std::size_t>(
            std::lower_bound(grid.begin(), grid.end(), times[i])
            - grid.begin());

    DisplacementSampler const sampler(spec.model);
    TorusGeometry const geo(spec.model.d, spec.model.L);
    std::size_t const R = spec.replicas;
    ens.A.assign(R, {});
    std::vector<std::uint64_t> events(R, 0);
    std::vector<std::optional<AutocovAccumulator>> accs(R);
    auto const sites = strided_sites(
        geo.num_sites(), spec.autocov ? spec.autocov->site_stride : 1);

    parallel_for(R, spec.workers, [&](std::size_t r) {
        Rng rng(derive_seed(spec.seed, spec.first_replica + r, 0));
        auto config = sample_configuration(rng, spec.model, spec.profile,
                                           SourceSelection::composition);
        FunctionalRecorder rec(spec.obs, spec.profile, geo, grid,
                               spec.recorder);
        std::vector<Observer*> observers{&rec};
        std::optional<SnapshotSampler> snap;
        if (spec.autocov && r < spec.autocov_replicas)
        {
            auto const& s = *spec.autocov;
            accs[r].emplace(sites.size(), s.max_lag,
                            samples_per_batch(grid.back(), s));
            snap.emplace(sites, s.dt, s.burn_in, *accs[r],
                         spec.recorder.centering, spec.profile.gamma);
            observers.push_back(&*snap);
        }
        auto const run = advance_until(config, sampler, grid.back(),
                                       observers, rng);
        events[r] = run.events;
        auto const path = rec.path();
        std::vector<double> row(times.size());
        for (std::size_t i = 0; i < times.size(); ++i)
            row[i] = path.values.at(slot[i]);
        ens.A[r] = std::move(row);
    });

    ens.events = std::accumulate(events.begin(), events.end(),
                                 std::uint64_t{0});
    if (spec.autocov && spec.autocov_replicas > 0)
    {
        std::optional<AutocovAccumulator> merged;
        for (auto& a : accs)
        {
            if (!a)
                continue;
            if (!merged)
                merged.emplace(std::move(*a));
            else
                merged->merge(*a);
        }
        if (merged)
            ens.autocov = merged->finish(spec.autocov->dt);
    }
    return ens;
}

AutocovRun run_autocov(AutocovRunSpec const& spec)
{
    spec.model.validate();
    DisplacementSampler const sampler(spec.model);
    TorusGeometry const geo(spec.model.d, spec.model.L);
    auto const sites = strided_sites(geo.num_sites(), spec.settings.site_stride);
    std::size_t const R = std::max<std::size_t>(1, spec.replicas);
    std::vector<std::optional<AutocovAccumulator>> accs(R);
    std::vector<std::uint64_t> events(R, 0);
    parallel_for(R, spec.workers, [&](std::size_t r) {
        Rng rng(derive_seed(spec.seed, r, 2));
        auto config = sample_configuration(rng, spec.model, spec.profile,
                                           SourceSelection::composition);
        accs[r].emplace(sites.size(), spec.settings.max_lag,
                        samples_per_batch(spec.horizon, spec.settings));
        SnapshotSampler snap(sites, spec.settings.dt, spec.settings.burn_in,
                             *accs[r], spec.centering, spec.profile.gamma);
        Observer* obs[] = {&snap};
        events[r] = advance_until(config, sampler, spec.horizon, obs, rng)
                        .events;
    });
    AutocovAccumulator merged = std::move(*accs[0]);
    for (std::size_t r = 1; r < R; ++r)
        merged.merge(*accs[r]);
    AutocovRun out;
    out.estimate = merged.finish(spec.settings.dt);
    out.events = std::accumulate(events.begin(), events.end(),
                                 std::uint64_t{0});
    return out;
}

StationarityResult run_stationarity(ModelSpec const& model,
                                    EquilibriumProfile const& profile,
                                    std::size_t runs,
                                    double horizon,
                                    std::uint64_t seed,
                                    unsigned workers)
{
    model.validate();
    DisplacementSampler const sampler(model);
    StationarityResult res;
    res.p_values.assign(runs, 0.0);
    res.events.assign(runs, 0);
    std::vector<char> conserved(runs, 1);
    parallel_for(runs, workers, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r, 1));
        auto config = sample_configuration(rng, model, profile,
                                           SourceSelection::composition);
        auto const n0 = config.total_particles();
        res.events[r]
            = advance_until(config, sampler, horizon, {}, rng).events;
        std::int64_t n1 = 0;
        std::vector<std::int64_t> counts;
        for (auto k : config.occupancy())
        {
            n1 += k;
            if (static_cast<std::size_t>(k) >= counts.size())
                counts.resize(k + 1, 0);
            ++counts[k];
        }
        conserved[r] = (n0 == n1 && n1 == config.total_particles()
                        && config.audit())
                           ? 1
                           : 0;
        res.p_values[r] = chi_square(counts, profile.pmf).p_value;
    });
    res.conserved = std::all_of(conserved.begin(), conserved.end(),
                                [](char c) { return c != 0; });
    return res;
}

std::pair<double, double> decay_exponent(AutocovEstimate const& est,
                                         double t_lo,
                                         double t_hi)
{
    std::vector<double> xs, ys;
    for (std::size_t l = 1; l < est.value.size(); ++l)
    {
        double const t = est.lag_time(l);
        if (t < t_lo || t > t_hi || !(est.value[l] > 0))
            continue;
        xs.push_back(std::log(t));
        ys.push_back(std::log(est.value[l]));
    }
    if (xs.size() < 3)
        throw ValidationError(
            "decay fit needs at least 3 positive lags in the fit range");
    double const n = static_cast<double>(xs.size());
    double const mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double const my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    double const slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        double const r = ys[i] - my - slope * (xs[i] - mx);
        rss += r * r;
    }
    double const se = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    return {slope, se};
}

//---------------------------------------------------------------------------//
std::string to_string(ExperimentKind kind)
{
    switch (kind)
    {
        case ExperimentKind::sample_equilibrium:
            return "sample-equilibrium";
        case ExperimentKind::stationarity:
            return "stationarity";
        case ExperimentKind::autocov:
            return "autocov";
        case ExperimentKind::scaling:
            return "scaling";
        case ExperimentKind::fdd_law:
            return "fdd-law";
        case ExperimentKind::lclt:
            return "lclt";
        case ExperimentKind::constants:
            return "constants";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(std::string const& name)
{
    static std::map<std::string, ExperimentKind> const table{
        {"sample-equilibrium", ExperimentKind::sample_equilibrium},
        {"stationarity", ExperimentKind::stationarity},
        {"simulate", ExperimentKind::stationarity},
        {"autocov", ExperimentKind::autocov},
        {"scaling", ExperimentKind::scaling},
        {"fdd-law", ExperimentKind::fdd_law},
        {"lclt", ExperimentKind::lclt},
        {"constants", ExperimentKind::constants},
    };
    auto it = table.find(name);
    if (it == table.end())
        throw ParseError(fmt::format("experiment: unknown kind '{}'", name));
    return it->second;
}

namespace
{
template <class T>
T field(json const& j, char const* key, std::string const& where)
{
    if (!j.contains(key))
        throw ParseError(
            fmt::format("{}: missing field '{}'", where, key));
    try
    {
        return j.at(key).get<T>();
    }
    catch (json::exception const& e)
    {
        throw ParseError(fmt::format("{}.{}: {}", where, key, e.what()));
    }
}

template <class T>
T field_or(json const& j, char const* key, T fallback, std::string const& where)
{
    if (!j.contains(key))
        return fallback;
    return field<T>(j, key, where);
}

Centering centering_from_string(std::string const& s)
{
    if (s == "ensemble")
        return Centering::ensemble;
    if (s == "realized_density")
        return Centering::realized_density;
    throw ParseError(fmt::format(
        "centering: unknown value '{}' (ensemble|realized_density)", s));
}

std::string to_string(Centering c)
{
    return c == Centering::ensemble ? "ensemble" : "realized_density";
}

json params_block(ExperimentPlan const& plan, char const* name)
{
    if (plan.params.contains(name))
        return plan.params.at(name);
    return json::object();
}

bool law_experiment(ExperimentKind k)
{
    return k == ExperimentKind::scaling || k == ExperimentKind::fdd_law;
}
}  // namespace

ExperimentPlan plan_from_json(json const& j)
{
    if (!j.is_object())
        throw ParseError("plan: top level must be an object");
    ExperimentPlan plan;
    plan.raw = j;
    plan.experiment = experiment_kind_from_string(
        field_or<std::string>(j, "experiment", "scaling", "plan"));
    auto const& m = j.contains("model") ? j.at("model") : json::object();
    if (!j.contains("model"))
        throw ParseError("plan: missing field 'model'");
    plan.model.d = field<int>(m, "d", "model");
    plan.model.alpha = field<double>(m, "alpha", "model");
    plan.model.L = field<std::int64_t>(m, "L", "model");
    plan.model.gamma = field<double>(m, "gamma", "model");
    if (!m.contains("rate"))
        throw ParseError("model: missing field 'rate'");
    try
    {
        plan.model.rate_family = rate_family_from_json(m.at("rate"));
    }
    catch (ParseError const& e)
    {
        throw ParseError(fmt::format("model.{}", e.what()));
    }
    catch (json::exception const& e)
    {
        throw ParseError(fmt::format("model.rate: {}", e.what()));
    }
    if (j.contains("observable"))
        plan.observable = j.at("observable");
    plan.N_grid = field_or<std::vector<double>>(j, "N_grid", {}, "plan");
    plan.t_grid = field_or<std::vector<double>>(j, "t_grid", {1.0}, "plan");
    plan.replicas = field_or<std::size_t>(j, "replicas", 100, "plan");
    plan.seed = field_or<std::uint64_t>(j, "seed", 1, "plan");
    plan.workers = field_or<unsigned>(j, "workers", 1, "plan");
    plan.output = field_or<std::string>(j, "output", "zrp_out", "plan");
    plan.centering = centering_from_string(field_or<std::string>(
        j, "centering", "ensemble", "plan"));
    for (char const* key : {"stationarity", "autocov", "scaling", "fdd",
                            "lclt", "sample"})
        if (j.contains(key))
            plan.params[key] = j.at(key);
    validate_plan(plan);
    return plan;
}

ExperimentPlan load_plan(fs::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError(fmt::format("cannot open plan file '{}'",
                                     path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    std::string const text = buf.str();
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (json::parse_error const& e)
    {
        std::size_t const pos = std::min<std::size_t>(e.byte, text.size());
        auto const line = 1 + std::count(text.begin(), text.begin() + pos,
                                         '\n');
        throw ParseError(fmt::format("{}:{}: malformed JSON ({})",
                                     path.string(), line, e.what()));
    }
    return plan_from_json(j);
}

std::int64_t minimum_side(ExperimentPlan const& plan)
{
    if (!law_experiment(plan.experiment) || plan.N_grid.empty())
        return 1;
    // Only long-memory regimes need the walk scale inside the box; in the
    // diffusive regimes correlations are integrable and the torus wraps.
    if (integrated_autocovariance_finite(plan.model.d, plan.model.alpha))
        return 1;
    double const n_max
        = *std::max_element(plan.N_grid.begin(), plan.N_grid.end());
    double const t_max
        = *std::max_element(plan.t_grid.begin(), plan.t_grid.end());
    double const h = scaling_h(std::max(n_max * t_max, 2.0), plan.model.alpha);
    auto L = static_cast<std::int64_t>(std::ceil(8.0 * h));
    return L + (L % 2);
}

void validate_plan(ExperimentPlan const& plan)
{
    plan.model.validate();
    if (plan.workers < 1)
        throw ValidationError("workers: must be >= 1");
    if (plan.replicas < 1)
        throw ValidationError("replicas: must be >= 1");
    for (double t : plan.t_grid)
        if (!(t > 0))
            throw ValidationError("t_grid: entries must be > 0");
    if (!std::is_sorted(plan.t_grid.begin(), plan.t_grid.end()))
        throw ValidationError("t_grid: must be increasing");
    for (double N : plan.N_grid)
        if (!(N > 0))
            throw ValidationError("N_grid: entries must be > 0");
    if (law_experiment(plan.experiment))
    {
        if (plan.N_grid.empty())
            throw ValidationError(fmt::format(
                "N_grid: required for the {} experiment",
                to_string(plan.experiment)));
        if (plan.experiment == ExperimentKind::scaling
            && plan.N_grid.size() < 4)
            throw ValidationError(fmt::format(
                "N_grid: scaling needs at least 4 values, got {}",
                plan.N_grid.size()));
        if (plan.replicas < 100)
            throw ValidationError(fmt::format(
                "replicas: law checks need >= 100, got {}", plan.replicas));
        auto const L_min = minimum_side(plan);
        if (plan.model.L < L_min)
        {
            double const n_max
                = *std::max_element(plan.N_grid.begin(), plan.N_grid.end());
            double const t_max = plan.t_grid.back();
            throw ValidationError(fmt::format(
                "model.L = {} is below 8*h_alpha(N_max*t_max) = "
                "8*h_{}({}) = {:.1f}; use L >= {}",
                plan.model.L, plan.model.alpha, n_max * t_max,
                8.0 * scaling_h(n_max * t_max, plan.model.alpha), L_min));
        }
    }
    if (plan.centering == Centering::realized_density
        && plan.observable.value("kind", "occupation") != "occupation")
        throw ValidationError(
            "centering: realized_density applies to the occupation "
            "observable only");
}

EquilibriumProfile plan_profile(ExperimentPlan const& plan)
{
    return fugacity_of_density(plan.model.gamma, plan.model.rate_family);
}

ObservableSpec plan_observable(ExperimentPlan const& plan,
                               EquilibriumProfile const& profile)
{
    auto const& o = plan.observable;
    auto const kind = observable_kind_from_string(
        field_or<std::string>(o, "kind", "occupation", "observable"));
    switch (kind)
    {
        case ObservableKind::occupation:
            return ObservableSpec::occupation();
        case ObservableKind::rate_centered:
            return ObservableSpec::rate_centered();
        case ObservableKind::window_custom:
            return ObservableSpec::window_custom_table(
                plan.model.d, field<double>(o, "radius", "observable"),
                field<int>(o, "cap", "observable"),
                field<double>(o, "degree", "observable"),
                field<std::vector<double>>(o, "table", "observable"),
                profile);
    }
    throw ParseError("observable: unknown kind");
}

//---------------------------------------------------------------------------//
bool RunReport::pass() const
{
    return std::all_of(verdicts.begin(), verdicts.end(),
                       [](Verdict const& v) { return v.pass; });
}

int exit_code(RunReport const& report)
{
    return report.pass() ? 0 : 2;
}

void print_verdicts(std::ostream& os, std::vector<Verdict> const& verdicts)
{
    os << fmt::format("{:<34} {:>14} {:>14} {:>12} {:>12}  {}\n", "check",
                      "target", "estimate", "se", "tolerance", "result");
    for (auto const& v : verdicts)
        os << fmt::format("{:<34} {:>14.6g} {:>14.6g} {:>12.4g} {:>12.4g}  {}\n",
                          v.check, v.target, v.estimate, v.se, v.tolerance,
                          v.pass ? "PASS" : "FAIL");
}

namespace
{
json verdicts_json(std::vector<Verdict> const& vs)
{
    json a = json::array();
    for (auto const& v : vs)
        a.push_back(to_json(v));
    return a;
}

void write_json(fs::path const& path, json const& j)
{
    std::ofstream out(path);
    if (!out)
        throw Error(fmt::format("cannot write '{}'", path.string()));
    out << std::setw(2) << j << '\n';
}

json read_json(fs::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("missing result file '{}'", path.string()));
    try
    {
        return json::parse(in);
    }
    catch (json::exception const& e)
    {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

//--- stationarity ---------------------------------------------------------//
std::vector<Verdict> analyze_stationarity(json const& p,
                                          std::vector<double> const& pvals,
                                          bool conserved)
{
    double const level = field_or<double>(p, "level", 0.01, "stationarity");
    auto const runs = static_cast<double>(pvals.size());
    double const min_pass = field_or<double>(
        p, "min_pass", std::ceil(0.9 * runs), "stationarity");
    double const passed = static_cast<double>(std::count_if(
        pvals.begin(), pvals.end(), [level](double x) { return x > level; }));
    std::vector<Verdict> out;
    out.push_back({"particle conservation", 1, conserved ? 1.0 : 0.0, 0, 0,
                   conserved});
    out.push_back({fmt::format("runs with chi2 p > {}", level), min_pass,
                   passed, 0, 0, passed >= min_pass});
    return out;
}

//--- autocovariance -------------------------------------------------------//
AutocovEstimate estimate_from_json(json const& j)
{
    AutocovEstimate est;
    est.dt = j.at("dt").get<double>();
    est.value = j.at("C").get<std::vector<double>>();
    est.se = j.at("se").get<std::vector<double>>();
    est.mean = j.value("mean", 0.0);
    est.samples = j.value("samples", std::size_t{0});
    est.channels = j.value("channels", std::size_t{1});
    est.batches = j.value("batches", std::size_t{0});
    if (j.contains("batch_C"))
        est.batch_values
            = j.at("batch_C").get<std::vector<std::vector<double>>>();
    return est;
}

json estimate_to_json(AutocovEstimate const& est)
{
    return {{"dt", est.dt},           {"C", est.value},
            {"se", est.se},           {"mean", est.mean},
            {"samples", est.samples}, {"channels", est.channels},
            {"batches", est.batches}, {"batch_C", est.batch_values}};
}

std::vector<Verdict> analyze_autocov(ExperimentPlan const& plan,
                                     json const& p,
                                     AutocovEstimate const& est,
                                     double relax_const)
{
    int const d = plan.model.d;
    double const alpha = plan.model.alpha;
    std::vector<Verdict> out;
    double const se_tol = field_or<double>(p, "se_tol", 3.0, "autocov");
    for (double t : field_or<std::vector<double>>(p, "check_times", {},
                                                  "autocov"))
    {
        double const lag = 2.0 * t / est.dt;
        auto const l = static_cast<std::size_t>(std::llround(lag));
        if (std::abs(lag - static_cast<double>(l)) > 1e-9
            || l >= est.value.size())
            throw ValidationError(fmt::format(
                "autocov.check_times: 2t = {} is not a sampled lag", 2 * t));
        double const scale = std::pow(scaling_h(t, alpha), d);
        Verdict v;
        v.check = fmt::format("C(2t) h(t)^d at t={}", t);
        v.target = relax_const;
        v.estimate = est.value[l] * scale;
        v.se = est.se[l] * scale;
        v.tolerance = se_tol * v.se;
        v.pass = std::abs(v.estimate - v.target) <= v.tolerance;
        out.push_back(v);
    }
    if (p.contains("decay_fit"))
    {
        auto const range = field<std::vector<double>>(p, "decay_fit", "autocov");
        if (range.size() != 2)
            throw ValidationError("autocov.decay_fit: expected [t_lo, t_hi]");
        auto const [slope, se] = decay_exponent(est, range[0], range[1]);
        Verdict v;
        v.check = "decay exponent of C(t)";
        v.target = -d / std::min(2.0, alpha);
        v.estimate = slope;
        v.se = se;
        v.tolerance = field_or<double>(p, "decay_tol", 0.1, "autocov");
        v.pass = std::abs(slope - v.target) <= v.tolerance;
        out.push_back(v);
    }
    return out;
}

//--- scaling --------------------------------------------------------------//
std::size_t grid_index(std::vector<double> const& grid, double x)
{
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (std::abs(grid[i] - x) <= 1e-12 * std::max(1.0, std::abs(x)))
            return i;
    throw ValidationError(fmt::format("value {} is not on the grid", x));
}

double scaling_time(ExperimentPlan const& plan, json const& p)
{
    double const fallback = std::find(plan.t_grid.begin(), plan.t_grid.end(),
                                      1.0) != plan.t_grid.end()
                                ? 1.0
                                : plan.t_grid.back();
    return field_or<double>(p, "t", fallback, "scaling");
}

std::vector<Verdict> analyze_scaling(ExperimentPlan const& plan,
                                     json const& p,
                                     Ensemble const& ens,
                                     LimitLaw const& law,
                                     json const& sigma_block,
                                     json& details)
{
    double const t = scaling_time(plan, p);
    std::size_t const jt = grid_index(ens.t_grid, t);
    std::vector<std::vector<double>> samples;
    for (std::size_t i = 0; i < ens.N_grid.size(); ++i)
        samples.push_back(ens.column(i, jt));
    auto const fit = variance_scaling(ens.N_grid, samples);
    details["t"] = t;
    details["N"] = fit.N;
    details["variance"] = fit.variance;
    details["variance_se"] = fit.se;
    details["slope"] = fit.slope;
    details["slope_se"] = fit.slope_se;
    details["slope_ci"] = {fit.ci_low, fit.ci_high};
    details["intercept"] = fit.intercept;

    std::vector<Verdict> out;
    Verdict v;
    v.check = "variance scaling slope";
    v.target = field_or<double>(p, "slope_target", 2.0 * law.hurst, "scaling");
    v.estimate = fit.slope;
    v.se = fit.slope_se;
    v.tolerance = field_or<double>(p, "slope_tol", 0.1, "scaling");
    v.pass = std::abs(v.estimate - v.target) <= v.tolerance;
    if (p.contains("slope_bounds"))
    {
        auto const b = field<std::vector<double>>(p, "slope_bounds", "scaling");
        v.check = fmt::format("variance scaling slope in ({}, {})", b.at(0),
                              b.at(1));
        v.target = 0.5 * (b.at(0) + b.at(1));
        v.tolerance = 0.5 * (b.at(1) - b.at(0));
        v.pass = v.estimate > b.at(0) && v.estimate < b.at(1);
    }
    out.push_back(v);

    if (!sigma_block.is_null() && sigma_block.contains("sigma2"))
    {
        double const sigma2 = sigma_block.at("sigma2").get<double>();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < fit.N.size(); ++i)
        {
            double const ratio = fit.variance[i] / (fit.N[i] * t);
            double const se = fit.se[i] / (fit.N[i] * t);
            num += ratio / (se * se);
            den += 1.0 / (se * se);
        }
        double const pooled = num / den;
        details["variance_over_N"] = pooled;
        details["variance_over_N_se"] = std::sqrt(1.0 / den);
        Verdict s;
        s.check = "Var(A)/(tN) vs integrated autocov";
        s.target = sigma2;
        s.estimate = pooled;
        s.se = std::sqrt(1.0 / den);
        s.tolerance = field_or<double>(p, "sigma_tol", 0.15, "scaling")
                      * sigma2;
        s.pass = std::abs(pooled - sigma2) <= s.tolerance;
        out.push_back(s);
    }
    return out;
}

//--- fdd law --------------------------------------------------------------//
std::vector<Verdict> analyze_fdd(ExperimentPlan const& plan,
                                 json const& p,
                                 std::vector<Ensemble> const& ensembles,
                                 LimitLaw const& law,
                                 json& details)
{
    std::optional<double> sigma;
    if (p.contains("sigma"))
        sigma = field<double>(p, "sigma", "fdd");
    if (!law.scale && !sigma)
        throw ValidationError(
            "fdd.sigma: this regime has a measured sigma; supply fdd.sigma "
            "(e.g. from the autocov experiment)");
    double const sig = law.scale ? *law.scale : *sigma;
    auto const& grid = ensembles.front().N_grid;
    double const N = field_or<double>(p, "N", grid.back(), "fdd");
    std::size_t const iN = grid_index(grid, N);
    double const lambda = law.normalizer(N);
    double const level = field_or<double>(p, "ks_level", 0.01, "fdd");
    double const ks_time = field_or<double>(
        p, "ks_time", plan.t_grid.back(), "fdd");
    std::size_t const E = ensembles.size();
    auto const min_pass = field_or<std::size_t>(
        p, "min_ks_pass", E - E / 5, "fdd");
    std::vector<Verdict> out;
    std::size_t ks_pass = 0;
    json ks = json::array();
    for (auto const& ens : ensembles)
    {
        auto col = ens.column(iN, grid_index(ens.t_grid, ks_time));
        for (auto& x : col)
            x /= lambda;
        double const var = sig * sig * std::pow(ks_time, 2 * law.hurst);
        auto const r = ks_test(col, [var](double x) { return normal_cdf(x, var); });
        ks.push_back({{"statistic", r.statistic}, {"p", r.p_value}});
        if (r.p_value > level)
            ++ks_pass;
    }
    details["sigma"] = sig;
    details["hurst"] = law.hurst;
    details["lambda"] = lambda;
    details["ks"] = ks;
    out.push_back({fmt::format("ensembles with KS p > {} at t={}", level,
                               ks_time),
                   static_cast<double>(min_pass),
                   static_cast<double>(ks_pass), 0, 0, ks_pass >= min_pass});

    auto const& e0 = ensembles.front();
    std::vector<std::vector<double>> scaled(e0.A.size());
    for (std::size_t r = 0; r < e0.A.size(); ++r)
        for (std::size_t j = 0; j < e0.t_grid.size(); ++j)
            scaled[r].push_back(e0.at(r, iN, j) / lambda);
    LawCheckOptions opts;
    opts.cov_se = field_or<double>(p, "cov_se", 4.0, "fdd");
    opts.ks_level = level;
    auto const report = hurst_and_law_check(scaled, e0.t_grid, law.hurst, sig,
                                            opts);
    for (auto const& v : report.verdicts)
        if (v.check.rfind("cov", 0) == 0)
            out.push_back(v);
    json all = json::array();
    for (auto const& v : report.verdicts)
        all.push_back(to_json(v));
    details["ensemble0_report"] = all;

    // A full N grid also yields the variance scaling verdict, taken from the
    // first ensemble so the replica count matches a standalone scaling run.
    if (grid.size() >= 4)
    {
        json sd;
        auto const sc = analyze_scaling(plan, params_block(plan, "scaling"),
                                        e0, law, json(), sd);
        out.insert(out.end(), sc.begin(), sc.end());
        details["scaling"] = sd;
    }
    return out;
}

//--- lclt -----------------------------------------------------------------//
std::vector<Verdict> analyze_lclt(json const& p,
                                  std::vector<double> const& s,
                                  std::vector<double> const& sup,
                                  double origin_estimate,
                                  double origin_target)
{
    std::vector<Verdict> out;
    bool dec = true;
    for (std::size_t i = 1; i < sup.size(); ++i)
        dec = dec && sup[i] < sup[i - 1];
    out.push_back({"sup discrepancy strictly decreasing", 1,
                   dec ? 1.0 : 0.0, 0, 0, dec});
    double const tol = field_or<double>(p, "origin_tol", 0.02, "lclt");
    Verdict v;
    v.check = fmt::format("h(s)^d p_s(0,0) at s={}", s.back());
    v.target = origin_target;
    v.estimate = origin_estimate;
    v.tolerance = tol * origin_target;
    v.pass = std::abs(origin_estimate - origin_target) <= v.tolerance;
    out.push_back(v);
    return out;
}

//--- paths.csv ------------------------------------------------------------//
void write_ensemble_csv(std::ostream& os,
                        std::vector<Ensemble> const& ensembles)
{
    os << "replica,N,t,A\n" << std::setprecision(17);
    std::size_t base = 0;
    for (auto const& ens : ensembles)
    {
        for (std::size_t r = 0; r < ens.A.size(); ++r)
            for (std::size_t i = 0; i < ens.N_grid.size(); ++i)
                for (std::size_t j = 0; j < ens.t_grid.size(); ++j)
                    os << base + r << ',' << ens.N_grid[i] << ','
                       << ens.t_grid[j] << ',' << ens.at(r, i, j) << '\n';
        base += ens.A.size();
    }
}

std::vector<Ensemble> read_ensemble_csv(fs::path const& path,
                                        std::size_t per_ensemble)
{
    std::ifstream in(path);
    if (!in)
        throw Error(fmt::format("missing result file '{}'", path.string()));
    std::string line;
    std::getline(in, line);
    if (line != "replica,N,t,A")
        throw ParseError(fmt::format("{}: unexpected header '{}'",
                                     path.string(), line));
    std::map<std::size_t, std::map<std::pair<double, double>, double>> rows;
    std::vector<double> Ns, ts;
    std::size_t lineno = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string a, b, c, e;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')
            || !std::getline(ss, c, ',') || !std::getline(ss, e))
            throw ParseError(fmt::format("{}:{}: expected 4 columns",
                                         path.string(), lineno));
        try
        {
            auto const r = static_cast<std::size_t>(std::stoull(a));
            double const N = std::stod(b), t = std::stod(c), A = std::stod(e);
            rows[r][{N, t}] = A;
            if (std::find(Ns.begin(), Ns.end(), N) == Ns.end())
                Ns.push_back(N);
            if (std::find(ts.begin(), ts.end(), t) == ts.end())
                ts.push_back(t);
        }
        catch (std::exception const&)
        {
            throw ParseError(fmt::format("{}:{}: malformed number",
                                         path.string(), lineno));
        }
    }
    std::vector<Ensemble> out;
    std::size_t count = 0;
    for (auto const& [r, m] : rows)
    {
        if (count % per_ensemble == 0)
        {
            Ensemble e;
            e.N_grid = Ns;
            e.t_grid = ts;
            out.push_back(std::move(e));
        }
        std::vector<double> row;
        for (double N : Ns)
            for (double t : ts)
            {
                auto it = m.find({N, t});
                if (it == m.end())
                    throw ParseError(fmt::format(
                        "{}: replica {} lacks (N={}, t={})", path.string(), r,
                        N, t));
                row.push_back(it->second);
            }
        out.back().A.push_back(std::move(row));
        ++count;
    }
    if (out.empty())
        throw ParseError(fmt::format("{}: no rows", path.string()));
    return out;
}

json manifest_json(ExperimentPlan const& plan,
                   double wall,
                   bool complete,
                   std::vector<std::string> const& files,
                   std::string const& error)
{
    json m;
    m["artifact_version"] = artifact_version;
    m["experiment"] = to_string(plan.experiment);
    m["plan"] = plan.raw;
    m["effective"] = {{"seed", plan.seed},
                      {"workers", plan.workers},
                      {"replicas", plan.replicas},
                      {"centering", to_string(plan.centering)}};
    m["wall_time_s"] = wall;
    m["complete"] = complete;
    m["files"] = files;
    if (!error.empty())
        m["error"] = error;
    m["operations"] = {
        {"model_core", "kernel_mass, validate_rate_family"},
        {"equilibrium", "fugacity_of_density, sample_marginal"},
        {"kmc_engine", "advance_until"},
        {"functional_recorder", "FunctionalRecorder, SnapshotSampler"},
        {"spectral_walk", "scaling_h, normalizer, lclt_discrepancy"},
        {"stable_limits", "theorem_coefficient, relaxation_constant"},
        {"stats_harness",
         "autocovariance, integrated_autocovariance, variance_scaling, "
         "ks_test, chi_square, hurst_and_law_check"},
    };
    return m;
}

std::optional<AutocovSettings> settings_from_json(json const& a,
                                                  std::string const& where)
{
    if (a.is_null() || a.empty())
        return std::nullopt;
    AutocovSettings s;
    s.dt = field_or<double>(a, "dt", 1.0, where);
    s.max_lag = field_or<std::size_t>(a, "max_lag", 50, where);
    s.burn_in = field_or<double>(a, "burn_in", 0.0, where);
    s.site_stride = field_or<std::size_t>(a, "site_stride", 1, where);
    s.batches_per_replica = field_or<std::size_t>(a, "batches", 1, where);
    return s;
}
}  // namespace

RunReport run_plan(ExperimentPlan const& plan)
{
    validate_plan(plan);
    auto const t_start = std::chrono::steady_clock::now();
    fs::path const dir(plan.output);
    fs::create_directories(dir);
    std::vector<std::string> files;
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now()
                                             - t_start)
            .count();
    };

    auto const profile = plan_profile(plan);
    auto const obs = plan_observable(plan, profile);
    int const d = plan.model.d;
    double const alpha = plan.model.alpha;

    RunReport report;
    json& summary = report.summary;
    summary["experiment"] = to_string(plan.experiment);
    try
    {
        json constants = regime_report(d, alpha, profile, obs);
        constants["profile"] = profile_to_json(profile);
        constants["kernel_mass_torus"] = kernel_mass(plan.model);
        write_json(dir / "constants.json", constants);
        files.push_back("constants.json");

        switch (plan.experiment)
        {
            case ExperimentKind::sample_equilibrium:
            {
                auto const p = params_block(plan, "sample");
                auto const draws = field_or<std::size_t>(p, "draws",
                                                         plan.replicas,
                                                         "sample");
                std::vector<std::vector<std::int64_t>> hist(draws);
                parallel_for(draws, plan.workers, [&](std::size_t r) {
                    Rng rng(derive_seed(plan.seed, r, 3));
                    auto const c = sample_configuration(rng, plan.model,
                                                        profile);
                    for (auto k : c.occupancy())
                    {
                        if (static_cast<std::size_t>(k) >= hist[r].size())
                            hist[r].resize(k + 1, 0);
                        ++hist[r][k];
                    }
                });
                std::vector<std::int64_t> counts;
                for (auto const& h : hist)
                {
                    if (h.size() > counts.size())
                        counts.resize(h.size(), 0);
                    for (std::size_t k = 0; k < h.size(); ++k)
                        counts[k] += h[k];
                }
                auto const chi = chi_square(counts, profile.pmf);
                summary["counts"] = counts;
                summary["chi2"] = {{"statistic", chi.statistic},
                                   {"dof", chi.dof},
                                   {"p", chi.p_value}};
                double const level = field_or<double>(p, "level", 0.01,
                                                      "sample");
                report.verdicts.push_back({"pooled chi2 p-value", level,
                                           chi.p_value, 0, level,
                                           chi.p_value > level});
                break;
            }
            case ExperimentKind::stationarity:
            {
                auto const p = params_block(plan, "stationarity");
                auto const runs = field_or<std::size_t>(p, "runs", 20,
                                                        "stationarity");
                double const horizon = field_or<double>(p, "horizon", 1000.0,
                                                        "stationarity");
                auto const res = run_stationarity(plan.model, profile, runs,
                                                  horizon, plan.seed,
                                                  plan.workers);
                summary["p_values"] = res.p_values;
                summary["events"] = res.events;
                summary["conserved"] = res.conserved;
                report.verdicts
                    = analyze_stationarity(p, res.p_values, res.conserved);
                summary["pass_count"] = report.verdicts.back().estimate;
                break;
            }
            case ExperimentKind::autocov:
            {
                auto const p = params_block(plan, "autocov");
                AutocovRunSpec spec;
                spec.model = plan.model;
                spec.profile = profile;
                spec.horizon = field_or<double>(p, "horizon", 1000.0,
                                                "autocov");
                spec.settings = *settings_from_json(
                    p.empty() ? json{{"dt", 1.0}} : p, "autocov");
                spec.replicas = field_or<std::size_t>(p, "replicas", 1,
                                                      "autocov");
                spec.seed = plan.seed;
                spec.workers = plan.workers;
                spec.centering = plan.centering;
                auto const run = run_autocov(spec);
                summary["autocov"] = estimate_to_json(run.estimate);
                summary["events"] = run.events;
                auto const integ = integrated_autocovariance(run.estimate, d,
                                                             alpha);
                if (integ.value)
                    summary["sigma2"] = {{"value", *integ.value},
                                         {"se", integ.se},
                                         {"cutoff_lag", integ.cutoff_lag}};
                if (!integ.warning.empty())
                    summary["warning"] = integ.warning;
                double const rc = relaxation_constant(d, alpha, profile, obs);
                summary["relaxation_constant"] = rc;
                report.verdicts = analyze_autocov(plan, p, run.estimate, rc);
                break;
            }
            case ExperimentKind::scaling:
            {
                auto const p = params_block(plan, "scaling");
                EnsembleSpec spec;
                spec.model = plan.model;
                spec.obs = obs;
                spec.profile = profile;
                spec.N_grid = plan.N_grid;
                spec.t_grid = plan.t_grid;
                spec.replicas = plan.replicas;
                spec.seed = plan.seed;
                spec.workers = plan.workers;
                spec.recorder.centering = plan.centering;
                if (p.contains("autocov"))
                {
                    spec.autocov = settings_from_json(p.at("autocov"),
                                                      "scaling.autocov");
                    spec.autocov_replicas = field_or<std::size_t>(
                        p.at("autocov"), "replicas", 20, "scaling.autocov");
                }
                auto const ens = run_ensemble(spec);
                {
                    std::ofstream out(dir / "paths.csv");
                    write_ensemble_csv(out, {ens});
                }
                files.push_back("paths.csv");
                summary["events"] = ens.events;
                json sigma_block;
                if (ens.autocov)
                {
                    summary["autocov"] = estimate_to_json(*ens.autocov);
                    auto const integ
                        = integrated_autocovariance(*ens.autocov, d, alpha);
                    if (integ.value)
                        sigma_block = {{"sigma2", *integ.value},
                                       {"se", integ.se},
                                       {"cutoff_lag", integ.cutoff_lag}};
                    if (!integ.warning.empty())
                        summary["warning"] = integ.warning;
                }
                summary["sigma_hat"] = sigma_block;
                auto const law = theorem_coefficient(d, alpha, profile, obs);
                json details;
                report.verdicts
                    = analyze_scaling(plan, p, ens, law, sigma_block, details);
                summary["scaling"] = details;
                break;
            }
            case ExperimentKind::fdd_law:
            {
                auto const p = params_block(plan, "fdd");
                auto const E = field_or<std::size_t>(p, "ensembles", 1, "fdd");
                double const N = field_or<double>(p, "N", plan.N_grid.back(),
                                                  "fdd");
                grid_index(plan.N_grid, N);
                std::vector<Ensemble> ensembles;
                std::uint64_t events = 0;
                for (std::size_t e = 0; e < E; ++e)
                {
                    EnsembleSpec spec;
                    spec.model = plan.model;
                    spec.obs = obs;
                    spec.profile = profile;
                    spec.N_grid = plan.N_grid;
                    spec.t_grid = plan.t_grid;
                    spec.replicas = plan.replicas;
                    spec.seed = plan.seed;
                    spec.first_replica = e * plan.replicas;
                    spec.workers = plan.workers;
                    spec.recorder.centering = plan.centering;
                    ensembles.push_back(run_ensemble(spec));
                    events += ensembles.back().events;
                }
                {
                    std::ofstream out(dir / "paths.csv");
                    write_ensemble_csv(out, ensembles);
                }
                files.push_back("paths.csv");
                summary["events"] = events;
                auto const law = theorem_coefficient(d, alpha, profile, obs);
                json details;
                report.verdicts = analyze_fdd(plan, p, ensembles, law, details);
                summary["fdd"] = details;
                break;
            }
            case ExperimentKind::lclt:
            {
                auto const p = params_block(plan, "lclt");
                if (d != 1)
                    throw ValidationError(
                        "lclt: the discrepancy sweep is implemented for d = 1");
                double const t = field_or<double>(p, "t", 1.0, "lclt");
                auto const svals = field_or<std::vector<double>>(
                    p, "s", {1e2, 1e3, 1e4}, "lclt");
                double const window = field_or<double>(p, "window", 10.0,
                                                       "lclt");
                std::vector<double> sup;
                for (double s : svals)
                    sup.push_back(lclt_discrepancy(t, s, alpha, window));
                WalkSymbol const sym(1, alpha);
                std::int64_t const zero = 0;
                double const s_max = svals.back();
                double const origin
                    = scaling_h(s_max, alpha)
                      * transition_probability(sym, s_max,
                                               std::span(&zero, 1), 1e-13);
                double const target = stable_density_at_origin(1.0, 1, alpha);
                {
                    std::ofstream out(dir / "lclt.csv");
                    out << "s,sup_discrepancy\n" << std::setprecision(17);
                    for (std::size_t i = 0; i < svals.size(); ++i)
                        out << svals[i] << ',' << sup[i] << '\n';
                }
                files.push_back("lclt.csv");
                summary["s"] = svals;
                summary["sup_discrepancy"] = sup;
                summary["origin_estimate"] = origin;
                summary["origin_target"] = target;
                report.verdicts = analyze_lclt(p, svals, sup, origin, target);
                break;
            }
            case ExperimentKind::constants:
                summary["report"] = regime_report(d, alpha, profile, obs);
                break;
        }
        summary["verdicts"] = verdicts_json(report.verdicts);
        summary["pass"] = report.pass();
        write_json(dir / "summary.json", summary);
        files.push_back("summary.json");
        write_json(dir / "manifest.json",
                   manifest_json(plan, wall(), true, files, ""));
    }
    catch (std::exception const& e)
    {
        write_json(dir / "manifest.json",
                   manifest_json(plan, wall(), false, files, e.what()));
        throw;
    }
    return report;
}

RunReport verify_results(ExperimentPlan const& plan, fs::path const& results)
{
    auto const manifest = read_json(results / "manifest.json");
    if (!manifest.value("complete", false))
        throw Error("results are flagged incomplete in manifest.json");
    auto const summary = read_json(results / "summary.json");
    auto const profile = plan_profile(plan);
    auto const obs = plan_observable(plan, profile);
    int const d = plan.model.d;
    double const alpha = plan.model.alpha;

    RunReport report;
    report.summary = summary;
    switch (plan.experiment)
    {
        case ExperimentKind::sample_equilibrium:
        {
            auto const counts
                = summary.at("counts").get<std::vector<std::int64_t>>();
            auto const chi = chi_square(counts, profile.pmf);
            double const level = field_or<double>(params_block(plan, "sample"),
                                                  "level", 0.01, "sample");
            report.verdicts.push_back({"pooled chi2 p-value", level,
                                       chi.p_value, 0, level,
                                       chi.p_value > level});
            break;
        }
        case ExperimentKind::stationarity:
            report.verdicts = analyze_stationarity(
                params_block(plan, "stationarity"),
                summary.at("p_values").get<std::vector<double>>(),
                summary.at("conserved").get<bool>());
            break;
        case ExperimentKind::autocov:
            report.verdicts = analyze_autocov(
                plan, params_block(plan, "autocov"),
                estimate_from_json(summary.at("autocov")),
                relaxation_constant(d, alpha, profile, obs));
            break;
        case ExperimentKind::scaling:
        {
            auto const ens = read_ensemble_csv(results / "paths.csv",
                                               plan.replicas);
            if (ens.size() != 1)
                throw ParseError("paths.csv: unexpected replica count");
            auto const law = theorem_coefficient(d, alpha, profile, obs);
            json details;
            report.verdicts = analyze_scaling(
                plan, params_block(plan, "scaling"), ens.front(), law,
                summary.value("sigma_hat", json()), details);
            break;
        }
        case ExperimentKind::fdd_law:
        {
            auto const ens = read_ensemble_csv(results / "paths.csv",
                                               plan.replicas);
            auto const law = theorem_coefficient(d, alpha, profile, obs);
            json details;
            report.verdicts = analyze_fdd(plan, params_block(plan, "fdd"), ens,
                                          law, details);
            break;
        }
        case ExperimentKind::lclt:
            report.verdicts = analyze_lclt(
                params_block(plan, "lclt"),
                summary.at("s").get<std::vector<double>>(),
                summary.at("sup_discrepancy").get<std::vector<double>>(),
                summary.at("origin_estimate").get<double>(),
                stable_density_at_origin(1.0, 1, alpha));
            break;
        case ExperimentKind::constants:
            break;
    }
    return report;
}
}  // namespace zrp
