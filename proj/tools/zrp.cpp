// zrp: command-line driver for the long-range zero-range experiments.
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "zrp/error.hpp"
#include "zrp/experiment.hpp"

namespace
{
struct CommonArgs
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out;
    std::string format = "json";
    std::string results;
};

void add_common(CLI::App* sub, CommonArgs& args)
{
    sub->add_option("--config", args.config, "Experiment plan (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", args.seed, "Master seed (overrides ZRP_SEED)");
    sub->add_option("--workers", args.workers, "Worker threads");
    sub->add_option("--out", args.out, "Output directory");
    sub->add_option("--format", args.format, "Standard output format")
        ->check(CLI::IsMember({"csv", "json"}));
}

zrp::ExperimentPlan resolve_plan(CommonArgs const& args,
                                 std::optional<zrp::ExperimentKind> kind)
{
    auto j = [&] {
        auto plan = zrp::load_plan(args.config);
        return plan.raw;
    }();
    if (kind)
        j["experiment"] = zrp::to_string(*kind);
    if (char const* env = std::getenv("ZRP_SEED"))
    {
        try
        {
            j["seed"] = std::stoull(env);
        }
        catch (std::exception const&)
        {
            throw zrp::ParseError(
                fmt::format("ZRP_SEED='{}' is not an unsigned integer", env));
        }
    }
    if (args.seed)
        j["seed"] = *args.seed;
    if (args.workers)
        j["workers"] = *args.workers;
    if (!args.out.empty())
        j["output"] = args.out;
    return zrp::plan_from_json(j);
}

void emit(zrp::RunReport const& report,
          zrp::ExperimentPlan const& plan,
          std::string const& format)
{
    auto const& s = report.summary;
    if (format == "csv")
    {
        if (plan.experiment == zrp::ExperimentKind::lclt)
        {
            std::cout << "s,sup_discrepancy\n";
            auto const sv = s.at("s");
            auto const dv = s.at("sup_discrepancy");
            for (std::size_t i = 0; i < sv.size(); ++i)
                std::cout << fmt::format("{},{:.17g}\n", sv[i].get<double>(),
                                         dv[i].get<double>());
        }
        else
        {
            std::cout << "check,target,estimate,se,tolerance,pass\n";
            for (auto const& v : report.verdicts)
                std::cout << fmt::format("\"{}\",{:.17g},{:.17g},{:.17g},"
                                         "{:.17g},{}\n",
                                         v.check, v.target, v.estimate, v.se,
                                         v.tolerance, v.pass ? 1 : 0);
        }
        return;
    }
    if (plan.experiment == zrp::ExperimentKind::constants)
    {
        std::cout << s.at("report").dump(2) << '\n';
        return;
    }
    zrp::print_verdicts(std::cout, report.verdicts);
    std::cout << (report.pass() ? "PASS" : "FAIL") << '\n';
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Long-range zero-range process experiments"};
    app.require_subcommand(1);

    struct Entry
    {
        char const* name;
        char const* help;
        std::optional<zrp::ExperimentKind> kind;
    };
    Entry const entries[] = {
        {"sample-equilibrium", "Draw product-measure configurations",
         zrp::ExperimentKind::sample_equilibrium},
        {"simulate", "Run the dynamics and test stationarity",
         zrp::ExperimentKind::stationarity},
        {"autocov", "Stationary autocovariance and relaxation constant",
         zrp::ExperimentKind::autocov},
        {"scaling", "Variance scaling of the additive functional",
         zrp::ExperimentKind::scaling},
        {"fdd-law", "Finite-dimensional limit law checks",
         zrp::ExperimentKind::fdd_law},
        {"lclt", "Local limit discrepancy sweep", zrp::ExperimentKind::lclt},
        {"constants", "Regime report of the limit constants",
         zrp::ExperimentKind::constants},
        {"verify", "Re-evaluate the checks of a finished run", std::nullopt},
    };
    CommonArgs args;
    std::map<CLI::App*, Entry const*> subs;
    for (auto const& e : entries)
    {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, args);
        if (!e.kind)
            sub->add_option("--results", args.results,
                            "Result directory (default: --out or plan output)");
        subs[sub] = &e;
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try
    {
        for (auto const& [sub, entry] : subs)
        {
            if (!sub->parsed())
                continue;
            if (entry->kind)
            {
                auto const plan = resolve_plan(args, entry->kind);
                auto const report = zrp::run_plan(plan);
                emit(report, plan, args.format);
                return zrp::exit_code(report);
            }
            auto const plan = resolve_plan(args, std::nullopt);
            std::string const dir = !args.results.empty() ? args.results
                                                          : plan.output;
            auto const report = zrp::verify_results(plan, dir);
            zrp::print_verdicts(std::cout, report.verdicts);
            std::cout << (report.pass() ? "PASS" : "FAIL") << '\n';
            return zrp::exit_code(report);
        }
    }
    catch (std::exception const& e)
    {
        std::cerr << "zrp: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
