#ifndef FINSLER_HARNESS_HPP
#define FINSLER_HARNESS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finsler/gallery.hpp"
#include "finsler/sweep.hpp"

namespace finsler {

// What a scenario constructs before its checks run.
enum class ScenarioKind {
    family,         // metric recovered from navigation data along a triple
    quadratic,      // closed quadratic-phi construction from the same data
    flat_parallel,  // flat alpha, parallel beta: locally Minkowskian
    zero_curvature, // disk seeds reshaped to the K = 0 member
    randers_guard,  // deliberately degenerate parameters; the guard must refuse
};

const char* kind_name(ScenarioKind k);
ScenarioKind kind_from_name(const std::string& name); // ConfigError on unknown

struct Scenario {
    std::string name;
    std::string summary;
    ScenarioKind kind = ScenarioKind::family;
    ABParams params{2.0, 0.0, -3.0, 2.0};
    double eps = 1.0; // quadratic kind: phi = 1 + a1 s + eps s^2
    NavigationData nav;
    std::string triple = "family"; // family | quadratic
    int n = 3;
    int sample_count = 40;
    std::uint64_t seed = 1;
    // 0 keeps nav.mu; the wrong-mu control claims a different curvature and
    // must be caught by the space-form check
    double claimed_mu = 0;
    // scale of the polynomial perturbation added to the 1-form; breaks the
    // scalar-curvature structure and must be caught by the Weyl check
    double beta_perturb = 0;
    std::map<std::string, double> tolerances; // per-check overrides
    std::vector<std::string> expect_fail;     // negative controls: exact failing set

    double effective_mu() const { return claimed_mu != 0 ? claimed_mu : nav.mu; }
    void validate() const; // ConfigError on malformed configuration
};

struct CheckResult {
    std::string check;
    std::string paper_anchor; // the identity this check certifies, as display text
    double max_residual = 0;  // +inf when the check died with a typed error
    double tolerance = 0;
    bool pass = false;
    int samples = 0;
    std::int64_t wall_time_ms = 0;
    std::string note; // typed-error message, empty otherwise

    bool operator==(const CheckResult&) const = default;
};

struct VerificationReport {
    std::string scenario;
    std::vector<CheckResult> checks;

    bool all_pass() const;
    std::vector<std::string> failing() const;
    bool operator==(const VerificationReport&) const = default;
};

// The checks a scenario will run, before tolerance overrides; used both by
// the runner and by `describe`.
struct CheckSpec {
    std::string name;
    std::string anchor;
    double tolerance = 0;
};
std::vector<CheckSpec> scenario_plan(const Scenario& sc);

const std::vector<Scenario>& builtin_scenarios();
const Scenario* find_builtin(const std::string& name); // nullptr when absent

Scenario scenario_from_json(const std::string& text); // ConfigError on bad input
std::string scenario_to_json(const Scenario& sc);
Scenario load_scenario_file(const std::string& path); // ConfigError

// Executes the scenario's full check plan.  Typed errors from any module are
// recorded as failed checks carrying the message; they do not escape.
// tolerance_scale multiplies every tolerance after overrides.
VerificationReport run_scenario(const Scenario& sc, SweepMode mode = SweepMode::parallel,
                                double tolerance_scale = 1.0);

// A scenario is in order when the set of failing checks equals expect_fail;
// for ordinary scenarios that set is empty.
bool outcome_ok(const Scenario& sc, const VerificationReport& r);

enum class ReportFormat { table, records };
ReportFormat format_from_name(const std::string& name); // ConfigError on unknown
std::string emit_report(const VerificationReport& r, ReportFormat f);

// Line-delimited records parse back into reports, one per scenario in input
// order; parse_records insists on exactly one.
std::vector<VerificationReport> parse_records_all(const std::string& text);
VerificationReport parse_records(const std::string& text);

} // namespace finsler

#endif
