#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "finsler/errors.hpp"
#include "finsler/harness.hpp"

using namespace finsler;

namespace {

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::string format = "table";
    std::string out;
    double tolerance_scale = 1.0;
    bool serial = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--seed", o.seed, "override the scenario seed");
    cmd->add_option("--samples", o.samples, "override the sample count")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--format", o.format, "report format: table or records")
        ->check(CLI::IsMember({"table", "records"}));
    cmd->add_option("--out", o.out,
                    "also write the report to this path (FINSLER_REPORT_OUT works too)");
    cmd->add_option("--tolerance-scale", o.tolerance_scale,
                    "multiply every check tolerance by this factor")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--serial", o.serial, "run the sweeps single threaded");
}

Scenario resolve(const std::string& ref) {
    if (const Scenario* sc = find_builtin(ref)) return *sc;
    if (std::ifstream probe(ref); probe) return load_scenario_file(ref);
    throw ConfigError("no builtin scenario or readable file named " + ref +
                      " (try `finslerab list`)");
}

Scenario with_overrides(Scenario sc, const RunOptions& o) {
    if (o.seed) sc.seed = *o.seed;
    if (o.samples) sc.sample_count = *o.samples;
    sc.validate();
    return sc;
}

// returns 0 when the outcome matches the scenario's expectations
int run_one(const Scenario& sc, const RunOptions& o, std::string& sink) {
    const auto mode = o.serial ? SweepMode::serial : SweepMode::parallel;
    const auto report = run_scenario(sc, mode, o.tolerance_scale);
    const bool ok = outcome_ok(sc, report);
    sink += emit_report(report, format_from_name(o.format));
    if (o.format == "table" && !sc.expect_fail.empty()) {
        sink += "  control: expected failures {";
        for (std::size_t i = 0; i < sc.expect_fail.size(); ++i)
            sink += (i ? ", " : "") + sc.expect_fail[i];
        sink += ok ? "} hit exactly\n" : "} NOT matched\n";
    }
    return ok ? 0 : 1;
}

int deliver(const std::string& text, const RunOptions& o) {
    std::fputs(text.c_str(), stdout);
    std::string path = o.out;
    if (path.empty())
        if (const char* env = std::getenv("FINSLER_REPORT_OUT")) path = env;
    if (!path.empty()) {
        std::ofstream f(path);
        if (!f) throw ConfigError("cannot write report to " + path);
        f << text;
    }
    return 0;
}

void describe(const Scenario& sc) {
    std::printf("%s: %s\n", sc.name.c_str(), sc.summary.c_str());
    std::printf("  kind %s, n = %d, %d samples, seed %llu\n", kind_name(sc.kind), sc.n,
                sc.sample_count, static_cast<unsigned long long>(sc.seed));
    std::printf("  params: k1 = %g, k2 = %g, k3 = %g, a1 = %g\n", sc.params.k1,
                sc.params.k2, sc.params.k3, sc.params.a1);
    if (sc.kind == ScenarioKind::quadratic) std::printf("  eps = %g\n", sc.eps);
    if (sc.kind == ScenarioKind::family) std::printf("  triple: %s\n", sc.triple.c_str());
    if (sc.kind != ScenarioKind::flat_parallel && sc.kind != ScenarioKind::zero_curvature) {
        std::printf("  nav: mu = %g, k = %g, a = [", sc.nav.mu, sc.nav.k);
        for (std::size_t i = 0; i < sc.nav.a.size(); ++i)
            std::printf("%s%g", i ? ", " : "", sc.nav.a[i]);
        std::printf("]\n");
        if (sc.claimed_mu != 0) std::printf("  claimed mu: %g\n", sc.claimed_mu);
    }
    if (sc.beta_perturb != 0) std::printf("  beta perturbation: %g\n", sc.beta_perturb);
    if (!sc.expect_fail.empty()) {
        std::printf("  designated failures:");
        for (const auto& f : sc.expect_fail) std::printf(" %s", f.c_str());
        std::printf("\n");
    }
    std::printf("  checks:\n");
    for (const auto& spec : scenario_plan(sc)) {
        double tol = spec.tolerance;
        const char* mark = "";
        if (auto it = sc.tolerances.find(spec.name); it != sc.tolerances.end()) {
            tol = it->second;
            mark = " (override)";
        }
        std::printf("    %-26s %8.1e%s\n        %s\n", spec.name.c_str(), tol, mark,
                    spec.anchor.c_str());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"verification suite for projectively flat (alpha,beta)-metrics"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "list the builtin scenarios");
    (void)list_cmd;

    RunOptions opts;
    std::string scenario_ref;

    auto* run_cmd = app.add_subcommand("run", "run one scenario by name or config path");
    run_cmd->add_option("scenario", scenario_ref, "builtin name or JSON config path")
        ->required();
    add_run_options(run_cmd, opts);

    auto* all_cmd = app.add_subcommand("run-all", "run every builtin scenario");
    add_run_options(all_cmd, opts);

    auto* desc_cmd =
        app.add_subcommand("describe", "show a scenario's checks without running");
    desc_cmd->add_option("scenario", scenario_ref, "builtin name or JSON config path")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto& sc : builtin_scenarios())
                std::printf("%-22s %-14s %s%s\n", sc.name.c_str(), kind_name(sc.kind),
                            sc.summary.c_str(),
                            sc.expect_fail.empty() ? "" : "  [negative control]");
            return 0;
        }
        if (app.got_subcommand("describe")) {
            describe(resolve(scenario_ref));
            return 0;
        }
        if (app.got_subcommand("run")) {
            const Scenario sc = with_overrides(resolve(scenario_ref), opts);
            std::string text;
            const int rc = run_one(sc, opts, text);
            deliver(text, opts);
            return rc;
        }
        // run-all
        int rc = 0;
        std::string text;
        for (const auto& base : builtin_scenarios()) {
            const Scenario sc = with_overrides(base, opts);
            rc |= run_one(sc, opts, text);
            if (opts.format == "table") text += "\n";
        }
        deliver(text, opts);
        return rc;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
