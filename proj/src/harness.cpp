#include "finsler/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "finsler/deform.hpp"
#include "finsler/errors.hpp"
#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"

namespace finsler {

namespace {

using njson = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

} // namespace

const char* kind_name(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::family: return "family";
    case ScenarioKind::quadratic: return "quadratic";
    case ScenarioKind::flat_parallel: return "flat-parallel";
    case ScenarioKind::zero_curvature: return "zero-curvature";
    case ScenarioKind::randers_guard: return "randers-guard";
    }
    return "?";
}

ScenarioKind kind_from_name(const std::string& name) {
    for (ScenarioKind k : {ScenarioKind::family, ScenarioKind::quadratic,
                           ScenarioKind::flat_parallel, ScenarioKind::zero_curvature,
                           ScenarioKind::randers_guard})
        if (name == kind_name(k)) return k;
    throw ConfigError("unknown scenario kind: " + name);
}

void Scenario::validate() const {
    if (name.empty()) throw ConfigError("scenario needs a name");
    if (n < 3 || n > 4) throw ConfigError("dimension must be 3 or 4");
    if (nav.n != n) throw ConfigError("nav dimension disagrees with n");
    if (sample_count < 1) throw ConfigError("sample_count must be positive");
    if (!nav.a.empty() && static_cast<int>(nav.a.size()) != n)
        throw ConfigError("nav.a must be empty or length n");
    if (triple != "family" && triple != "quadratic")
        throw ConfigError("triple selector must be family or quadratic");
    for (const auto& [k, v] : tolerances)
        if (!(v > 0)) throw ConfigError("tolerance for " + k + " must be positive");
    switch (kind) {
    case ScenarioKind::family:
    case ScenarioKind::quadratic:
    case ScenarioKind::randers_guard:
        if (!(nav.mu > 0))
            throw ConfigError("navigation construction needs mu > 0");
        break;
    case ScenarioKind::flat_parallel:
        if (params.k1 != 2.0 || params.k2 != 0.0 || params.k3 != -3.0 || params.a1 != 2.0)
            throw ConfigError("flat-parallel runs the square form");
        break;
    case ScenarioKind::zero_curvature:
        if (params.a1 == 0) throw ConfigError("zero-curvature member needs a1 != 0");
        break;
    }
    if (kind == ScenarioKind::quadratic && eps != 1.0 && eps != -1.0)
        throw ConfigError("eps must be +1 or -1");
    if (beta_perturb < 0) throw ConfigError("beta_perturb must be >= 0");
    const auto plan = scenario_plan(*this);
    for (const auto& name_ : expect_fail) {
        const bool known = std::any_of(plan.begin(), plan.end(),
                                       [&](const CheckSpec& c) { return c.name == name_; });
        if (!known) throw ConfigError("expect_fail names unknown check: " + name_);
    }
}

bool VerificationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> VerificationReport::failing() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (!c.pass) out.push_back(c.check);
    return out;
}

namespace {

// check name -> (anchor, default tolerance)
struct CheckDef {
    const char* name;
    const char* anchor;
    double tol;
};

const CheckDef kCheckDefs[] = {
    {"params-admissible", "k2 != k1 k3 keeps phi off the Randers-degenerate family", 1e-12},
    {"phi-ode-residual",
     "{1 + (k1+k3) s^2 + k2 s^4} phi'' = (k1 + k2 s^2){phi - s phi'}", 1e-10},
    {"phi-regularity", "phi > 0, phi - s phi' > 0, Delta > 0 on |s| <= b", 1e-12},
    {"space-form",
     "h_ij = {(1+mu|x|^2) d_ij - mu x_i x_j}/(1+mu|x|^2)^2 has sectional curvature mu",
     1e-6},
    {"p2-closed-form",
     "|p|^2_h = |a|^2 + (k^2 |x|^2 + 2k<a,x> - mu <a,x>^2)/(1+mu|x|^2)", 1e-10},
    {"conformality", "p_{i|j} = -2 c h_ij", 1e-8},
    {"delta-constancy", "delta^2 = |grad c|^2_h + mu c^2 is constant (n >= 3)", 1e-7},
    {"triple-ode",
     "u' f = v - k1 u;  v' u f = k2 u^2 - (k3+2k1) u v + 2 v^2;  2 w' u f = w{3v - "
     "(k3+2k1) u}",
     1e-10},
    {"deform-roundtrip", "h^2 = u alpha^2 + v beta^2,  rho = w beta", 1e-10},
    {"p2-identity", "p^2 = w^2 b^2 / (u + v b^2)", 1e-10},
    {"b2-root", "b^2 = p^2 / (1 + eps p^2)", 1e-12},
    {"spray-transfer",
     "G_h = G_alpha + tau{(k1 alpha^2 + k2 beta^2) b#/2 - ((k1 u - v)/u) beta y}", 1e-8},
    {"spray-dual-route",
     "G^i = G_alpha^i + alpha Q s^i_0 + Theta(-2 alpha Q s_0 + r_00) y^i/alpha + "
     "Psi(-2 alpha Q s_0 + r_00) b^i",
     1e-8},
    {"weyl-vanishes", "W^i_k = 0 iff the flag curvature is scalar", 1e-6},
    {"douglas-vanishes", "D_h^i_{jk} = 0 together with W = 0 iff projectively flat",
     1e-6},
    {"flag-extraction-residual", "R^i_k = K {F^2 d^i_k - F F_{y^k} y^i}", 1e-6},
    {"flag-closed-form",
     "closed K(s, b^2, tau, lambda) of the projectively flat family matches the "
     "extracted value",
     1e-6},
    {"curvature-bounds",
     "{sqrt(4 delta^2+mu^2) -+ 2 delta}^3 / {mu sqrt(4 delta^2+mu^2)} pinch K", 1e-9},
    {"regularity-window", "eps = -1 window: b^2 < 1/2 and s^2 < 1/2", 1e-12},
    {"curvature-zero", "K = 0", 1e-7},
    {"structure-covariant", "b_{i|j} = tau {(1 + k1 b^2) a_ij + (k2 b^2 + k3) b_i b_j}",
     1e-6},
    {"structure-curvature",
     "Rbar^i_k = lambda(alpha^2 d^i_k - y^i y_k) + eta(beta^2 d^i_k + alpha^2 b^i b_k "
     "- beta b^i y_k - beta b_k y^i)",
     1e-6},
    {"structure-gradient", "tau_{x^i} = q b_i,  q = (k3 - 2 k1 - k1^2 b^2) tau^2 - lambda",
     1e-6},
    {"structure-fit",
     "fitted tau, lambda reproduce eta and lambda = -(k1^2 b^2 + k3 + 2 a1^2) tau^2",
     1e-6},
    {"structure-gradient-fd", "tau_{x^i} = q b_i on the fitted tau", 1e-5},
};

CheckSpec spec_for(const char* name) {
    for (const auto& d : kCheckDefs)
        if (std::string(name) == d.name) return {d.name, d.anchor, d.tol};
    throw ConfigError(std::string("unknown check: ") + name);
}

} // namespace

std::vector<CheckSpec> scenario_plan(const Scenario& sc) {
    std::vector<const char*> names;
    switch (sc.kind) {
    case ScenarioKind::family:
        if (sc.beta_perturb > 0) {
            // the sabotage invalidates everything downstream of the 1-form;
            // keep the checks that are still mathematically owed and the one
            // that must catch it
            names = {"params-admissible", "phi-ode-residual", "phi-regularity",
                     "spray-dual-route", "weyl-vanishes"};
        } else {
            names = {"params-admissible", "phi-ode-residual", "phi-regularity",
                     "space-form",        "p2-closed-form",   "conformality",
                     "delta-constancy",   "triple-ode",       "deform-roundtrip",
                     "p2-identity",       "spray-transfer",   "spray-dual-route",
                     "weyl-vanishes",     "douglas-vanishes", "flag-extraction-residual",
                     "flag-closed-form",  "structure-covariant", "structure-curvature",
                     "structure-gradient"};
            if (sc.triple == "quadratic")
                names.insert(names.begin() + 10, "b2-root");
        }
        break;
    case ScenarioKind::quadratic:
        names = {"params-admissible", "phi-ode-residual", "phi-regularity",
                 "space-form",        "p2-closed-form",   "conformality",
                 "delta-constancy",   "spray-dual-route", "weyl-vanishes",
                 "douglas-vanishes",  "flag-extraction-residual", "flag-closed-form",
                 "structure-covariant", "structure-curvature", "structure-gradient"};
        if (sc.params.a1 == 2.0 && sc.eps == 1.0)
            names.insert(names.begin() + 12, "curvature-bounds");
        if (sc.eps == -1.0) names.push_back("regularity-window");
        break;
    case ScenarioKind::flat_parallel:
        names = {"params-admissible", "phi-ode-residual", "phi-regularity",
                 "spray-dual-route",  "weyl-vanishes",    "douglas-vanishes",
                 "flag-extraction-residual", "curvature-zero", "structure-covariant",
                 "structure-curvature", "structure-gradient"};
        break;
    case ScenarioKind::zero_curvature:
        names = {"params-admissible", "phi-ode-residual", "phi-regularity",
                 "spray-dual-route",  "weyl-vanishes",    "douglas-vanishes",
                 "flag-extraction-residual", "curvature-zero", "structure-fit",
                 "structure-gradient-fd"};
        break;
    case ScenarioKind::randers_guard:
        names = {"params-admissible", "space-form", "p2-closed-form", "conformality",
                 "delta-constancy"};
        break;
    }
    std::vector<CheckSpec> out;
    out.reserve(names.size());
    for (const char* n : names) out.push_back(spec_for(n));
    return out;
}

// ---------------------------------------------------------------------------
// builtin registry

namespace {

NavigationData nav3() {
    NavigationData nd;
    nd.n = 3;
    nd.mu = 1.0;
    nd.k = 0.3;
    nd.a = {0.12, -0.08, 0.05};
    return nd;
}

std::vector<Scenario> make_builtins() {
    std::vector<Scenario> v;

    {
        Scenario s;
        s.name = "square-family";
        s.summary = "square form recovered from navigation data along the explicit triple";
        s.kind = ScenarioKind::family;
        s.nav = nav3();
        s.sample_count = 40;
        s.seed = 1;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "square-remark-triple";
        s.summary = "square form along the quadratic triple; exercises the b^2 root";
        s.kind = ScenarioKind::family;
        s.triple = "quadratic";
        s.nav = nav3();
        s.sample_count = 30;
        s.seed = 2;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "generic-family";
        s.summary = "generic parameters where the two lambda weightings differ";
        s.kind = ScenarioKind::family;
        s.params = ABParams{0.8, 0.9, 0.4, 1.1};
        s.nav = nav3();
        s.sample_count = 30;
        s.seed = 3;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "family-n4";
        s.summary = "square family in dimension 4";
        s.kind = ScenarioKind::family;
        s.n = 4;
        s.nav = nav3();
        s.nav.n = 4;
        s.nav.a = {0.12, -0.08, 0.05, 0.04};
        s.sample_count = 12;
        s.seed = 4;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "square-quadratic";
        s.summary = "closed quadratic construction at a1=2, eps=1; curvature bounds apply";
        s.kind = ScenarioKind::quadratic;
        s.params = ABParams{2.0, 0.0, -3.0, 2.0};
        s.eps = 1.0;
        s.nav = nav3();
        s.sample_count = 40;
        s.seed = 5;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "quadratic-minus";
        s.summary = "eps = -1 branch inside its regularity window";
        s.kind = ScenarioKind::quadratic;
        s.params = ABParams{-2.0, 0.0, 3.0, 1.0};
        s.eps = -1.0;
        s.nav.n = 3;
        s.nav.mu = 1.0;
        s.nav.k = 0.1;
        s.sample_count = 30;
        s.seed = 6;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "riemannian-trivial";
        s.summary = "delta = 0 collapses to the chart metric; K = mu = 4";
        s.kind = ScenarioKind::quadratic;
        s.params = ABParams{2.0, 0.0, -3.0, 2.0};
        s.eps = 1.0;
        s.nav.n = 3;
        s.nav.mu = 4.0;
        s.nav.k = 0.0;
        s.sample_count = 20;
        s.seed = 7;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "flat-parallel";
        s.summary = "flat alpha with parallel beta: locally Minkowskian, everything 0";
        s.kind = ScenarioKind::flat_parallel;
        s.sample_count = 30;
        s.seed = 8;
        for (const char* c : {"spray-dual-route", "weyl-vanishes", "douglas-vanishes",
                              "flag-extraction-residual", "curvature-zero",
                              "structure-covariant", "structure-curvature",
                              "structure-gradient"})
            s.tolerances[c] = 1e-12;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "zero-curvature-2-2";
        s.summary = "K = 0 member at (k1, a1) = (2, 2): the square case";
        s.kind = ScenarioKind::zero_curvature;
        const auto c = zero_curvature_constants(2.0, 2.0);
        s.params = ABParams{2.0, c.k2, c.k3, 2.0};
        s.sample_count = 24;
        s.seed = 9;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "zero-curvature-1-1";
        s.summary = "K = 0 member at (k1, a1) = (1, 1)";
        s.kind = ScenarioKind::zero_curvature;
        const auto c = zero_curvature_constants(1.0, 1.0);
        s.params = ABParams{1.0, c.k2, c.k3, 1.0};
        s.sample_count = 24;
        s.seed = 10;
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "perturbed-beta";
        s.summary = "negative control: 1e-2 polynomial kick to the 1-form";
        s.kind = ScenarioKind::family;
        s.nav = nav3();
        s.beta_perturb = 1e-2;
        s.sample_count = 20;
        s.seed = 11;
        s.expect_fail = {"weyl-vanishes"};
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "wrong-mu";
        s.summary = "negative control: claims mu = 1.5 against data built at mu = 1";
        s.kind = ScenarioKind::family;
        s.nav = nav3();
        s.claimed_mu = 1.5;
        s.sample_count = 20;
        s.seed = 12;
        s.expect_fail = {"space-form"};
        v.push_back(s);
    }
    {
        Scenario s;
        s.name = "randers-degenerate";
        s.summary = "negative control: k2 = k1 k3 must be refused";
        s.kind = ScenarioKind::randers_guard;
        s.params = ABParams{0.8, 0.32, 0.4, 1.1};
        s.nav = nav3();
        s.sample_count = 16;
        s.seed = 13;
        s.expect_fail = {"params-admissible"};
        v.push_back(s);
    }

    for (auto& s : v) s.validate();
    return v;
}

} // namespace

const std::vector<Scenario>& builtin_scenarios() {
    static const std::vector<Scenario> v = make_builtins();
    return v;
}

const Scenario* find_builtin(const std::string& name) {
    for (const auto& s : builtin_scenarios())
        if (s.name == name) return &s;
    return nullptr;
}

// ---------------------------------------------------------------------------
// scenario (de)serialization

namespace {

const std::set<std::string> kScenarioKeys = {
    "name",    "summary",      "kind",       "params",       "a1",
    "eps",     "k1",           "nav",        "triple",       "n",
    "samples", "seed",         "claimed_mu", "beta_perturb", "tolerances",
    "expect_fail"};

double num_or(const njson& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
    return j[key].get<double>();
}

} // namespace

Scenario scenario_from_json(const std::string& text) {
    njson j;
    try {
        j = njson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kScenarioKeys.count(key))
            throw ConfigError("unknown scenario key: " + key);

    Scenario sc;
    if (!j.contains("name") || !j["name"].is_string())
        throw ConfigError("scenario needs a string name");
    sc.name = j["name"].get<std::string>();
    if (j.contains("summary")) sc.summary = j["summary"].get<std::string>();
    if (!j.contains("kind")) throw ConfigError("scenario needs a kind");
    sc.kind = kind_from_name(j["kind"].get<std::string>());
    sc.n = static_cast<int>(num_or(j, "n", 3));
    sc.nav.n = sc.n;

    switch (sc.kind) {
    case ScenarioKind::quadratic: {
        const double a1 = num_or(j, "a1", 2.0);
        sc.eps = num_or(j, "eps", 1.0);
        sc.params = ABParams{2 * sc.eps, 0.0, -3 * sc.eps, a1};
        break;
    }
    case ScenarioKind::zero_curvature: {
        const double k1 = num_or(j, "k1", 2.0);
        const double a1 = num_or(j, "a1", 2.0);
        const auto c = zero_curvature_constants(k1, a1);
        sc.params = ABParams{k1, c.k2, c.k3, a1};
        break;
    }
    default:
        if (j.contains("params")) {
            const auto& p = j["params"];
            sc.params.k1 = num_or(p, "k1", 2.0);
            sc.params.k2 = num_or(p, "k2", 0.0);
            sc.params.k3 = num_or(p, "k3", -3.0);
            sc.params.a1 = num_or(p, "a1", 2.0);
        }
        break;
    }

    if (j.contains("nav")) {
        const auto& nv = j["nav"];
        sc.nav.mu = num_or(nv, "mu", 1.0);
        sc.nav.k = num_or(nv, "k", 0.0);
        if (nv.contains("a")) {
            if (!nv["a"].is_array()) throw ConfigError("nav.a must be an array");
            sc.nav.a = nv["a"].get<Point>();
        }
    }
    if (j.contains("triple")) sc.triple = j["triple"].get<std::string>();
    sc.sample_count = static_cast<int>(num_or(j, "samples", 40));
    sc.seed = static_cast<std::uint64_t>(num_or(j, "seed", 1));
    sc.claimed_mu = num_or(j, "claimed_mu", 0.0);
    sc.beta_perturb = num_or(j, "beta_perturb", 0.0);
    if (j.contains("tolerances"))
        for (const auto& [key, val] : j["tolerances"].items())
            sc.tolerances[key] = val.get<double>();
    if (j.contains("expect_fail"))
        sc.expect_fail = j["expect_fail"].get<std::vector<std::string>>();

    sc.validate();
    return sc;
}

std::string scenario_to_json(const Scenario& sc) {
    njson j;
    j["name"] = sc.name;
    j["summary"] = sc.summary;
    j["kind"] = kind_name(sc.kind);
    switch (sc.kind) {
    case ScenarioKind::quadratic:
        j["a1"] = sc.params.a1;
        j["eps"] = sc.eps;
        break;
    case ScenarioKind::zero_curvature:
        j["k1"] = sc.params.k1;
        j["a1"] = sc.params.a1;
        break;
    default:
        j["params"] = {{"k1", sc.params.k1},
                       {"k2", sc.params.k2},
                       {"k3", sc.params.k3},
                       {"a1", sc.params.a1}};
        break;
    }
    j["nav"] = {{"mu", sc.nav.mu}, {"k", sc.nav.k}, {"a", sc.nav.a}};
    j["triple"] = sc.triple;
    j["n"] = sc.n;
    j["samples"] = sc.sample_count;
    j["seed"] = sc.seed;
    if (sc.claimed_mu != 0) j["claimed_mu"] = sc.claimed_mu;
    if (sc.beta_perturb != 0) j["beta_perturb"] = sc.beta_perturb;
    j["tolerances"] = sc.tolerances;
    j["expect_fail"] = sc.expect_fail;
    return j.dump(2) + "\n";
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// scenario construction and the check bodies

namespace {

struct CheckOutcome {
    double residual = 0;
    int samples = 0;
    std::string note;
};

ScalarField const_scalar(int n, double v) {
    ScalarField f;
    f.dim = n;
    f.eval = [v](const std::vector<Jet>& x) { return Jet::constant(x[0].space_ptr(), v); };
    return f;
}

double scalar_value(const ScalarField& f, const Point& x) {
    return f.eval(coordinate_jets(JetSpace::make(f.dim, 0, 0, 0), x)).value();
}

OneFormField perturbed(OneFormField base, double amp, int n) {
    OneFormField f;
    f.dim = n;
    f.eval = [base = std::move(base), amp, n](const std::vector<Jet>& x) {
        auto b = base.eval(x);
        for (int i = 0; i < n; ++i) b[i] += amp * (x[(i + 1) % n] * x[(i + 1) % n]);
        return b;
    };
    return f;
}

struct Built {
    const Scenario& sc;
    SweepMode mode;
    std::vector<Point> xs, ys;

    bool metric_ready = false;
    ABMetric metric;
    ScalarField tau, lambda, b2f;
    double delta = 0;
    std::optional<TripleSource> tsrc;

    bool nav_ready = false;
    MetricField h;
    OneFormField rho;
    ScalarField c;

    bool structure_ready = false;
    CondResiduals structure{};
    int structure_samples = 0;

    Built(const Scenario& s, SweepMode m) : sc(s), mode(m) {
        const int n = sc.n;
        xs.reserve(sc.sample_count);
        ys.reserve(sc.sample_count);
        for (int i = 0; i < sc.sample_count; ++i) {
            Rng rng(substream_seed(sc.seed, i));
            xs.push_back(sample_x(rng));
            Point y(n);
            double n2 = 0;
            do {
                n2 = 0;
                for (auto& cmp : y) {
                    cmp = rng.uniform(-1.0, 1.0);
                    n2 += cmp * cmp;
                }
            } while (n2 < 0.09);
            ys.push_back(y);
        }
    }

    Point sample_x(Rng& rng) const {
        const int n = sc.n;
        switch (sc.kind) {
        case ScenarioKind::flat_parallel:
        case ScenarioKind::zero_curvature: {
            const double r = sc.kind == ScenarioKind::flat_parallel ? 0.8 : 0.2;
            Point x(n);
            double n2 = 0;
            do {
                n2 = 0;
                for (auto& cmp : x) {
                    cmp = rng.uniform(-r, r);
                    n2 += cmp * cmp;
                }
            } while (n2 > r * r);
            return x;
        }
        default: return random_chart_point(n, sc.nav.mu, rng);
        }
    }

    const MetricField& need_h() {
        build_nav();
        return h;
    }

    void build_nav() {
        if (nav_ready) return;
        h = space_form_metric(sc.nav.mu, sc.n);
        rho = conformal_form(sc.nav);
        c = conformal_scalar(sc.nav);
        nav_ready = true;
    }

    const TripleSource& need_triple() {
        if (!tsrc) {
            sc.params.validate();
            tsrc = sc.triple == "quadratic" ? TripleSource::quadratic(sc.params)
                                            : TripleSource::family(sc.params);
        }
        return *tsrc;
    }

    const ABMetric& need_metric() {
        build_metric();
        return metric;
    }

    void build_metric() {
        if (metric_ready) return;
        switch (sc.kind) {
        case ScenarioKind::family: {
            auto fb = family_from_navigation(sc.nav, sc.params, need_triple());
            metric = std::move(fb.metric);
            tau = std::move(fb.tau);
            lambda = std::move(fb.lambda);
            b2f = std::move(fb.b2);
            if (sc.beta_perturb > 0)
                metric.b = perturbed(std::move(metric.b), sc.beta_perturb, sc.n);
            break;
        }
        case ScenarioKind::quadratic: {
            Rng rng(substream_seed(sc.seed, 555000));
            auto qb = quadratic_from_navigation(sc.nav, sc.params.a1, sc.eps, rng);
            metric = std::move(qb.metric);
            tau = std::move(qb.tau);
            lambda = std::move(qb.lambda);
            b2f = std::move(qb.b2);
            delta = qb.delta;
            break;
        }
        case ScenarioKind::flat_parallel: {
            metric.dim = sc.n;
            metric.a = euclidean_metric(sc.n);
            Point bv(sc.n, 0.0);
            bv[0] = 0.25;
            bv[sc.n - 1] += 0.1;
            metric.b = constant_form(bv);
            metric.phi = PhiSolution::closed_square();
            tau = const_scalar(sc.n, 0.0);
            lambda = const_scalar(sc.n, 0.0);
            break;
        }
        case ScenarioKind::zero_curvature: {
            metric = zero_curvature_metric(sc.params.k1, sc.params.a1,
                                           projective_disk_seeds(sc.n));
            break;
        }
        case ScenarioKind::randers_guard:
            throw ConfigError("degenerate parameters never build a metric");
        }
        metric_ready = true;
    }

    const CondResiduals& need_structure() {
        if (structure_ready) return structure;
        const auto& m = need_metric();
        structure_samples = std::min<int>(sc.sample_count, 12);
        for (int i = 0; i < structure_samples; ++i) {
            const auto cr = projflat_conditions_check(
                m.a, m.b, sc.params, tau, lambda, xs[i],
                {ys[i], ys[(i + 1) % ys.size()]});
            structure.cov = std::max(structure.cov, cr.cov);
            structure.curv = std::max(structure.curv, cr.curv);
            structure.grad = std::max(structure.grad, cr.grad);
        }
        structure_ready = true;
        return structure;
    }
};

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// s = beta/alpha and b^2 at a sample, straight from the fields
struct Invariants {
    double s = 0, b2 = 0;
};
Invariants invariants_at(const ABMetric& m, const Point& x, const Point& y) {
    const auto t = beta_tensors(m.a, m.b, x);
    const int n = m.dim;
    double a2 = 0, be = 0;
    for (int i = 0; i < n; ++i) {
        be += t.b[i] * y[i];
        for (int j = 0; j < n; ++j) a2 += t.a[n * i + j] * y[i] * y[j];
    }
    return {be / std::sqrt(a2), t.b2};
}

CheckOutcome check_params(Built& b) {
    b.sc.params.validate();
    return {0.0, 1, ""};
}

CheckOutcome check_phi_ode(Built& b) {
    const auto& phi = b.need_metric().phi;
    const double d = 0.95 * phi.domain();
    const int grid = 201;
    double worst = 0;
    for (int i = 0; i < grid; ++i) {
        const double s = -d + 2 * d * i / (grid - 1);
        worst = std::max(worst, std::abs(phi.ode_residual(s)));
    }
    return {worst, grid, ""};
}

CheckOutcome check_phi_regularity(Built& b) {
    const auto& m = b.need_metric();
    double bmax = 0;
    for (const auto& x : b.xs)
        bmax = std::max(bmax, std::sqrt(beta_tensors(m.a, m.b, x).b2));
    const auto reg = regularity_check(m.phi, bmax);
    CheckOutcome out;
    out.samples = static_cast<int>(b.xs.size());
    if (!reg.ok) {
        out.residual = 1.0 + std::abs(reg.min_margin);
        out.note = reg.failed_condition + fmt(" (margin %.3e at s = %.4f)",
                                              reg.min_margin, reg.argmin_s);
    }
    return out;
}

CheckOutcome check_space_form(Built& b) {
    b.build_nav();
    const double claim = b.sc.effective_mu();
    const auto rep = finsler::check_space_form(b.h, claim, b.xs, b.ys);
    CheckOutcome out;
    out.residual = std::max({rep.max_residual, rep.mu_fit_spread,
                             std::abs(rep.mu_fit_mean - claim) / (1 + std::abs(claim))});
    out.samples = static_cast<int>(b.xs.size());
    out.note = fmt("fitted mu = %.12g", rep.mu_fit_mean);
    return out;
}

CheckOutcome check_p2_closed(Built& b) {
    b.build_nav();
    const int n = b.sc.n;
    const JetSpace* sp = JetSpace::make(n, 0, 0, 0);
    double worst = 0;
    for (const auto& x : b.xs) {
        const auto xj = coordinate_jets(sp, x);
        const auto hv = b.h.eval(xj);
        const auto pv = b.rho.eval(xj);
        std::vector<double> hm(static_cast<std::size_t>(n) * n);
        for (std::size_t m = 0; m < hm.size(); ++m) hm[m] = hv[m].value();
        const auto hinv = adjugate_inverse(hm, n);
        double p2 = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                p2 += hinv[n * i + j] * pv[i].value() * pv[j].value();
        worst = std::max(worst, std::abs(p2 - conformal_p2_closed(b.sc.nav, x)));
    }
    return {worst, static_cast<int>(b.xs.size()), ""};
}

CheckOutcome check_conformality(Built& b) {
    b.build_nav();
    const auto rep = conformal_check(b.h, b.rho, b.c, b.xs);
    return {std::max(rep.max_conformal, rep.max_antisym),
            static_cast<int>(b.xs.size()), ""};
}

CheckOutcome check_delta(Built& b) {
    Rng rng(substream_seed(b.sc.seed, 777001));
    const int points = std::max(20, b.sc.sample_count / 2);
    const auto rep = conformal_delta(b.sc.nav, rng, points);
    return {rep.max_rel_dev, points, fmt("delta = %.12g", rep.delta)};
}

CheckOutcome check_triple_ode(Built& b) {
    const auto& T = b.need_triple();
    const double tcap = 0.8 * std::min(T.t_max(), 2.5);
    const int grid = 33;
    double worst = 0;
    for (int i = 0; i < grid; ++i) {
        const double t = tcap * i / (grid - 1);
        const auto r = triple_ode_residual(T.at(t), b.sc.params);
        worst = std::max({worst, r[0], r[1], r[2]});
    }
    return {worst, grid, ""};
}

CheckOutcome check_deform_roundtrip(Built& b) {
    const auto& m = b.need_metric();
    const auto& T = b.need_triple();
    b.build_nav();
    const int n = b.sc.n;
    const int count = std::min<int>(b.sc.sample_count, 12);
    const JetSpace* sp = JetSpace::make(n, 0, 0, 0);
    double worst = 0;
    for (int i = 0; i < count; ++i) {
        const auto dd = deform(m.a, m.b, T, b.xs[i], b.ys[i]);
        const auto xj = coordinate_jets(sp, b.xs[i]);
        const auto hv = b.h.eval(xj);
        const auto pv = b.rho.eval(xj);
        double h2 = 0, rv = 0;
        for (int r = 0; r < n; ++r) {
            rv += pv[r].value() * b.ys[i][r];
            for (int s = 0; s < n; ++s)
                h2 += hv[n * r + s].value() * b.ys[i][r] * b.ys[i][s];
        }
        const double hval = std::sqrt(h2);
        worst = std::max(worst, std::abs(dd.h - hval) / (1 + std::abs(hval)));
        worst = std::max(worst, std::abs(dd.rho - rv) / (1 + std::abs(rv)));
    }
    return {worst, count, ""};
}

CheckOutcome check_p2_identity(Built& b) {
    const auto& m = b.need_metric();
    const auto& T = b.need_triple();
    const int count = std::min<int>(b.sc.sample_count, 8);
    double worst = 0;
    for (int i = 0; i < count; ++i) {
        const auto dd = deform(m.a, m.b, T, b.xs[i], b.ys[i]);
        const auto tri = T.at(dd.b2);
        const double pred = tri.w * tri.w * dd.b2 / (tri.u + tri.v * dd.b2);
        worst = std::max(worst, std::abs(dd.p2 - pred));
    }
    return {worst, count, ""};
}

CheckOutcome check_b2_root(Built& b) {
    b.need_metric();
    const double eps = b.sc.params.k1 / 2.0;
    double worst = 0;
    for (const auto& x : b.xs) {
        const double p2 = conformal_p2_closed(b.sc.nav, x);
        const double want = p2 / (1 + eps * p2);
        worst = std::max(worst, std::abs(scalar_value(b.b2f, x) - want));
    }
    return {worst, static_cast<int>(b.xs.size()), ""};
}

CheckOutcome check_spray_transfer(Built& b) {
    const auto& m = b.need_metric();
    const auto& T = b.need_triple();
    const int count = std::min<int>(b.sc.sample_count, 10);
    const std::vector<Point> xs(b.xs.begin(), b.xs.begin() + count);
    const std::vector<Point> ys(b.ys.begin(), b.ys.begin() + count);
    return {spray_relation_check(m.a, m.b, T, b.tau, xs, ys), count, ""};
}

CheckOutcome check_spray_dual(Built& b) {
    const auto& m = b.need_metric();
    const auto sw = sweep_max(
        b.sc.sample_count,
        [&](int i) {
            const auto pair = finsler_spray(m, b.xs[i], b.ys[i]);
            return pair.max_diff / (1 + max_abs(pair.direct));
        },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_weyl(Built& b) {
    const auto& m = b.need_metric();
    const auto sw = sweep_max(
        b.sc.sample_count, [&](int i) { return max_abs(weyl(m, b.xs[i], b.ys[i]).W); },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_douglas(Built& b) {
    const auto& m = b.need_metric();
    const auto sw = sweep_max(
        b.sc.sample_count, [&](int i) { return max_abs(douglas(m, b.xs[i], b.ys[i])); },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_extraction(Built& b) {
    const auto& m = b.need_metric();
    const auto sw = sweep_max(
        b.sc.sample_count,
        [&](int i) {
            return extract_flag_curvature(riemann_curvature(m, b.xs[i], b.ys[i])).residual;
        },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_flag_closed(Built& b) {
    const auto& m = b.need_metric();
    const auto sw = sweep_max(
        b.sc.sample_count,
        [&](int i) {
            const auto fe = extract_flag_curvature(riemann_curvature(m, b.xs[i], b.ys[i]));
            const auto inv = invariants_at(m, b.xs[i], b.ys[i]);
            double want = 0;
            if (b.sc.kind == ScenarioKind::quadratic) {
                const double cv = scalar_value(b.c, b.xs[i]);
                want = closed_flag_curvature(b.sc.nav.mu, b.delta, cv, inv.s,
                                             b.sc.params.a1, b.sc.eps)
                           .K;
                if (b.sc.params.a1 == 2.0 && b.sc.eps == 1.0) {
                    const double sqK =
                        closed_flag_curvature_square(b.sc.nav.mu, b.delta, cv, inv.s).K;
                    if (std::abs(sqK - want) > std::abs(fe.K - want))
                        want = sqK; // report the worse of the two agreements
                }
            } else {
                want = scalar_flag_formula(m.phi, inv.s, inv.b2,
                                           scalar_value(b.tau, b.xs[i]),
                                           scalar_value(b.lambda, b.xs[i]));
            }
            return std::abs(fe.K - want) / (1 + std::abs(fe.K));
        },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_bounds(Built& b) {
    const auto& m = b.need_metric();
    b.build_nav();
    const auto sw = sweep_max(
        b.sc.sample_count,
        [&](int i) {
            const auto fe = extract_flag_curvature(riemann_curvature(m, b.xs[i], b.ys[i]));
            const auto inv = invariants_at(m, b.xs[i], b.ys[i]);
            const auto ck = closed_flag_curvature_square(
                b.sc.nav.mu, b.delta, scalar_value(b.c, b.xs[i]), inv.s);
            return std::max({0.0, ck.lower - fe.K, fe.K - ck.upper});
        },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_window(Built& b) {
    const auto& m = b.need_metric();
    double worst = 0;
    for (std::size_t i = 0; i < b.xs.size(); ++i) {
        const auto inv = invariants_at(m, b.xs[i], b.ys[i]);
        worst = std::max({worst, inv.b2 - 0.5, inv.s * inv.s - 0.5});
    }
    return {std::max(worst, 0.0), static_cast<int>(b.xs.size()), ""};
}

CheckOutcome check_curvature_zero(Built& b) {
    const auto& m = b.need_metric();
    const auto sw = sweep_max(
        b.sc.sample_count,
        [&](int i) {
            return std::abs(
                extract_flag_curvature(riemann_curvature(m, b.xs[i], b.ys[i])).K);
        },
        b.mode);
    return {sw.max_value, sw.samples, ""};
}

CheckOutcome check_structure(Built& b, int which) {
    const auto& s = b.need_structure();
    const double r = which == 0 ? s.cov : which == 1 ? s.curv : s.grad;
    return {r, b.structure_samples, ""};
}

CheckOutcome check_structure_fit(Built& b) {
    const auto& m = b.need_metric();
    const auto& p = b.sc.params;
    const int count = std::min<int>(b.sc.sample_count, 10);
    double worst = 0;
    for (int i = 0; i < count; ++i) {
        const Point& x = b.xs[i];
        const auto bt = beta_tensors(m.a, m.b, x);
        const double tau_f = fit_tau(bt, p);
        const auto le = fit_lambda_eta(m.a, m.b, p, x,
                                       {b.ys[i], b.ys[(i + 1) % b.ys.size()]});
        const auto cp = projflat_couplings(p, bt.b2, tau_f, le[0]);
        worst = std::max(worst, std::abs(le[1] - cp.eta) / (1 + std::abs(le[1])));
        const double lam_want =
            -(p.k1 * p.k1 * bt.b2 + p.k3 + 2 * p.a1 * p.a1) * tau_f * tau_f;
        worst = std::max(worst, std::abs(le[0] - lam_want) / (1 + std::abs(le[0])));
        const auto cond = projflat_conditions_check(
            m.a, m.b, p, const_scalar(b.sc.n, tau_f), const_scalar(b.sc.n, le[0]), x,
            {b.ys[i], b.ys[(i + 1) % b.ys.size()]});
        worst = std::max({worst, cond.cov, cond.curv});
    }
    return {worst, count, ""};
}

CheckOutcome check_structure_grad_fd(Built& b) {
    const auto& m = b.need_metric();
    const auto& p = b.sc.params;
    const int count = std::min<int>(b.sc.sample_count, 8);
    const double h = 1e-4;
    double worst = 0;
    for (int i = 0; i < count; ++i) {
        const Point& x = b.xs[i];
        const auto bt = beta_tensors(m.a, m.b, x);
        const double tau_f = fit_tau(bt, p);
        const auto le =
            fit_lambda_eta(m.a, m.b, p, x, {b.ys[i], b.ys[(i + 1) % b.ys.size()]});
        const double q = projflat_couplings(p, bt.b2, tau_f, le[0]).q;
        for (int d = 0; d < b.sc.n; ++d) {
            Point xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            const double tp = fit_tau(beta_tensors(m.a, m.b, xp), p);
            const double tm = fit_tau(beta_tensors(m.a, m.b, xm), p);
            worst = std::max(worst, std::abs((tp - tm) / (2 * h) - q * bt.b[d]));
        }
    }
    return {worst, count, ""};
}

CheckOutcome dispatch(const std::string& name, Built& b) {
    if (name == "params-admissible") return check_params(b);
    if (name == "phi-ode-residual") return check_phi_ode(b);
    if (name == "phi-regularity") return check_phi_regularity(b);
    if (name == "space-form") return check_space_form(b);
    if (name == "p2-closed-form") return check_p2_closed(b);
    if (name == "conformality") return check_conformality(b);
    if (name == "delta-constancy") return check_delta(b);
    if (name == "triple-ode") return check_triple_ode(b);
    if (name == "deform-roundtrip") return check_deform_roundtrip(b);
    if (name == "p2-identity") return check_p2_identity(b);
    if (name == "b2-root") return check_b2_root(b);
    if (name == "spray-transfer") return check_spray_transfer(b);
    if (name == "spray-dual-route") return check_spray_dual(b);
    if (name == "weyl-vanishes") return check_weyl(b);
    if (name == "douglas-vanishes") return check_douglas(b);
    if (name == "flag-extraction-residual") return check_extraction(b);
    if (name == "flag-closed-form") return check_flag_closed(b);
    if (name == "curvature-bounds") return check_bounds(b);
    if (name == "regularity-window") return check_window(b);
    if (name == "curvature-zero") return check_curvature_zero(b);
    if (name == "structure-covariant") return check_structure(b, 0);
    if (name == "structure-curvature") return check_structure(b, 1);
    if (name == "structure-gradient") return check_structure(b, 2);
    if (name == "structure-fit") return check_structure_fit(b);
    if (name == "structure-gradient-fd") return check_structure_grad_fd(b);
    throw ConfigError("unknown check: " + name);
}

} // namespace

VerificationReport run_scenario(const Scenario& sc, SweepMode mode, double tolerance_scale) {
    sc.validate();
    if (!(tolerance_scale > 0)) throw ConfigError("tolerance scale must be positive");
    VerificationReport rep;
    rep.scenario = sc.name;
    Built built(sc, mode);
    for (const CheckSpec& spec : scenario_plan(sc)) {
        double tol = spec.tolerance;
        if (auto it = sc.tolerances.find(spec.name); it != sc.tolerances.end())
            tol = it->second;
        tol *= tolerance_scale;

        const auto t0 = std::chrono::steady_clock::now();
        CheckOutcome out;
        try {
            out = dispatch(spec.name, built);
        } catch (const Error& e) {
            out.residual = kInf;
            out.samples = 0;
            out.note = e.what();
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        rep.checks.push_back({spec.name, spec.anchor, out.residual, tol,
                              out.residual <= tol, out.samples,
                              static_cast<std::int64_t>(ms), out.note});
    }
    return rep;
}

bool outcome_ok(const Scenario& sc, const VerificationReport& r) {
    auto failing = r.failing();
    auto expected = sc.expect_fail;
    std::sort(failing.begin(), failing.end());
    std::sort(expected.begin(), expected.end());
    return failing == expected;
}

// ---------------------------------------------------------------------------
// report formatting

ReportFormat format_from_name(const std::string& name) {
    if (name == "table") return ReportFormat::table;
    if (name == "records") return ReportFormat::records;
    throw ConfigError("unknown report format: " + name);
}

namespace {

std::string table_format(const VerificationReport& r) {
    std::string out = "scenario: " + r.scenario + "\n";
    out += fmt("  %-26s %13s %10s %8s %8s %6s\n", "check", "max-residual", "tolerance",
               "verdict", "samples", "ms");
    int passed = 0;
    for (const auto& c : r.checks) {
        out += fmt("  %-26s %13.3e %10.1e %8s %8d %6lld\n", c.check.c_str(),
                   c.max_residual, c.tolerance, c.pass ? "pass" : "FAIL", c.samples,
                   static_cast<long long>(c.wall_time_ms));
        if (!c.note.empty()) out += "      note: " + c.note + "\n";
        passed += c.pass;
    }
    out += fmt("  result: %d/%d checks passed\n", passed,
               static_cast<int>(r.checks.size()));
    return out;
}

std::string records_format(const VerificationReport& r) {
    std::string out;
    for (const auto& c : r.checks) {
        njson j;
        j["scenario"] = r.scenario;
        j["check"] = c.check;
        j["paper_anchor"] = c.paper_anchor;
        if (std::isfinite(c.max_residual))
            j["max_residual"] = c.max_residual;
        else
            j["max_residual"] = nullptr;
        j["tolerance"] = c.tolerance;
        j["verdict"] = c.pass ? "pass" : "fail";
        j["samples"] = c.samples;
        j["wall_time_ms"] = c.wall_time_ms;
        j["note"] = c.note;
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace

std::string emit_report(const VerificationReport& r, ReportFormat f) {
    return f == ReportFormat::table ? table_format(r) : records_format(r);
}

std::vector<VerificationReport> parse_records_all(const std::string& text) {
    std::vector<VerificationReport> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        njson j;
        try {
            j = njson::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(fmt("record line %d is not valid JSON: ", lineno) +
                              e.what());
        }
        for (const char* key : {"scenario", "check", "paper_anchor", "max_residual",
                                "tolerance", "verdict", "samples", "wall_time_ms",
                                "note"})
            if (!j.contains(key))
                throw ConfigError(fmt("record line %d misses field ", lineno) + key);

        const std::string scen = j["scenario"].get<std::string>();
        if (out.empty() || out.back().scenario != scen) {
            out.emplace_back();
            out.back().scenario = scen;
        }
        CheckResult c;
        c.check = j["check"].get<std::string>();
        c.paper_anchor = j["paper_anchor"].get<std::string>();
        c.max_residual =
            j["max_residual"].is_null() ? kInf : j["max_residual"].get<double>();
        c.tolerance = j["tolerance"].get<double>();
        const std::string verdict = j["verdict"].get<std::string>();
        if (verdict != "pass" && verdict != "fail")
            throw ConfigError("record verdict must be pass or fail");
        c.pass = verdict == "pass";
        c.samples = j["samples"].get<int>();
        c.wall_time_ms = j["wall_time_ms"].get<std::int64_t>();
        c.note = j["note"].get<std::string>();
        out.back().checks.push_back(std::move(c));
    }
    return out;
}

VerificationReport parse_records(const std::string& text) {
    auto all = parse_records_all(text);
    if (all.size() != 1)
        throw ConfigError(fmt("expected one scenario in the records, found %d",
                              static_cast<int>(all.size())));
    return std::move(all.front());
}

} // namespace finsler
