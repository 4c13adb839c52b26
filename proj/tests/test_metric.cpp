#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "finsler/fd.hpp"
#include "finsler/linalg.hpp"
#include "finsler/metric.hpp"
#include "finsler/rng.hpp"

#include "fixtures.hpp"

using namespace finsler;

namespace {

// F^2 of the square-shape metric in plain doubles, packed (x, y), for
// finite-difference cross checks that share nothing with the jet pipeline.
double square_F2(const MetricField& a, const OneFormField& b, const std::vector<double>& p) {
    const int n = a.dim;
    const Point x(p.begin(), p.begin() + n), y(p.begin() + n, p.end());
    double a2 = 0, be = 0;
    for (int i = 0; i < n; ++i) {
        be += testfix::form_entry(b, x, i) * y[i];
        for (int j = 0; j < n; ++j) a2 += testfix::field_entry(a, x, i, j) * y[i] * y[j];
    }
    const double s = be / std::sqrt(a2);
    const double ph = (1 + s) * (1 + s);
    return a2 * ph * ph;
}

ABMetric square_metric(MetricField a, OneFormField b) {
    ABMetric m;
    m.dim = a.dim;
    m.a = std::move(a);
    m.b = std::move(b);
    m.phi = PhiSolution::closed_square();
    return m;
}

} // namespace

TEST_CASE("fundamental tensor matches finite differences") {
    const int n = 3;
    const ABMetric m = square_metric(euclidean_metric(n), constant_form({0.3, 0.1, -0.2}));
    const Point x = {0.0, 0.0, 0.0};
    const Point y = {0.8, -0.5, 1.1};

    const std::vector<double> g = fundamental_tensor(m, x, y);
    CHECK(is_positive_definite(g, n));

    std::vector<double> p(x);
    p.insert(p.end(), y.begin(), y.end());
    FdOracle fd([&](const std::vector<double>& q) { return square_F2(m.a, m.b, q); });
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::vector<int> mm(2 * n, 0);
            mm[n + i] += 1;
            mm[n + j] += 1;
            CHECK(g[n * i + j] == doctest::Approx(0.5 * fd.partial(p, mm)).epsilon(1e-6));
        }
}

TEST_CASE("indefinite base metric is refused") {
    const int n = 3;
    MetricField bad;
    bad.dim = n;
    bad.eval = [n](const std::vector<Jet>& x) {
        std::vector<Jet> a(static_cast<std::size_t>(n) * n, Jet::constant(x[0].space_ptr(), 0.0));
        a[0] = Jet::constant(x[0].space_ptr(), 1.0);
        a[n + 1] = Jet::constant(x[0].space_ptr(), 1.0);
        a[2 * n + 2] = Jet::constant(x[0].space_ptr(), -0.5);
        return a;
    };
    const ABMetric m = square_metric(bad, constant_form({0.0, 0.0, 0.0}));
    CHECK_THROWS_AS(fundamental_tensor(m, {0.1, 0.2, 0.3}, {1.0, 0.2, 0.1}),
                    const DegeneracyError&);
}

TEST_CASE("spray routes agree on a curved sample") {
    const int n = 3;
    const ABMetric m = square_metric(testfix::ball_space_form(n, 0.5),
                                     testfix::radial_form(n, 0.2, 0.05));
    Rng rng(411);
    for (int t = 0; t < 20; ++t) {
        Point x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(-0.3, 0.3);
            y[i] = rng.uniform(-1.0, 1.0);
        }
        const SprayPair sp = finsler_spray(m, x, y);
        double scale = 1;
        for (double v : sp.direct) scale = std::max(scale, std::abs(v));
        CHECK(sp.max_diff <= 1e-10 * scale);
    }
}

TEST_CASE("spray coefficients match finite differences of F^2") {
    const int n = 3;
    const ABMetric m = square_metric(testfix::ball_space_form(n, 0.5),
                                     testfix::radial_form(n, 0.2, 0.05));
    const Point x = {0.12, -0.2, 0.25};
    const Point y = {0.7, -0.4, 0.5};

    const std::vector<double> g = fundamental_tensor(m, x, y);
    const std::vector<double> ginv = adjugate_inverse(g, n);
    std::vector<double> p(x);
    p.insert(p.end(), y.begin(), y.end());
    FdOracle fd([&](const std::vector<double>& q) { return square_F2(m.a, m.b, q); });

    std::vector<double> Gfd(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < n; ++l) {
            std::vector<int> mx(2 * n, 0);
            mx[l] = 1;
            double bracket = -fd.partial(p, mx);
            for (int k = 0; k < n; ++k) {
                std::vector<int> mm(2 * n, 0);
                mm[k] = 1;
                mm[n + l] = 1;
                bracket += y[k] * fd.partial(p, mm);
            }
            Gfd[i] += 0.25 * ginv[n * i + l] * bracket;
        }
    }
    const SprayPair sp = finsler_spray(m, x, y);
    double scale = 1;
    for (double v : sp.direct) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < n; ++i) CHECK(std::abs(sp.direct[i] - Gfd[i]) <= 1e-6 * scale);
}

TEST_CASE("phi == 1 collapses everything to the base geometry") {
    const int n = 3;
    const double mu = 0.7;
    ABMetric m;
    m.dim = n;
    m.a = testfix::ball_space_form(n, mu);
    m.b = constant_form({0.0, 0.0, 0.0});
    m.phi = PhiSolution::riemannian();

    const Point x = {0.1, -0.05, 0.2};
    const Point y = {0.6, 0.8, -0.3};

    const SprayPair sp = finsler_spray(m, x, y);
    const std::vector<double> Ga = alpha_spray(m.a, x, y);
    for (int i = 0; i < n; ++i) CHECK(sp.direct[i] == doctest::Approx(Ga[i]).epsilon(1e-10));

    const CurvatureBundle c = weyl(m, x, y);
    double rscale = 0;
    for (double v : c.R) rscale = std::max(rscale, std::abs(v));
    for (double v : c.W) CHECK(std::abs(v) <= 1e-10 * (1 + rscale));

    const FlagExtraction fx = extract_flag_curvature(c);
    CHECK(fx.K == doctest::Approx(mu).epsilon(1e-10));
    CHECK(fx.residual < 1e-10);
}

TEST_CASE("pipeline identities: flag pole and trace") {
    const int n = 3;
    const ABMetric m = square_metric(testfix::lumpy_metric(n),
                                     testfix::radial_form(n, 0.2, 0.05));
    Rng rng(90);
    for (int t = 0; t < 5; ++t) {
        Point x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(-0.25, 0.25);
            y[i] = rng.uniform(0.4, 1.0) * (rng.uniform() < 0.5 ? -1 : 1);
        }
        const CurvatureBundle c = weyl(m, x, y);
        double rscale = 1;
        for (double v : c.R) rscale = std::max(rscale, std::abs(v));
        for (double v : c.Ry) CHECK(std::abs(v) <= 1e-9 * rscale);
        CHECK(std::abs(c.trW) <= 1e-9 * rscale);
    }
}

TEST_CASE("douglas tensor vanishes for quadratic sprays only") {
    const int n = 3;
    const Point x = {0.2, 0.1, -0.15};
    const Point y = {0.7, -0.4, 0.5};

    ABMetric riem;
    riem.dim = n;
    riem.a = testfix::lumpy_metric(n);
    riem.b = constant_form({0.0, 0.0, 0.0});
    riem.phi = PhiSolution::riemannian();
    for (double v : douglas(riem, x, y)) CHECK(std::abs(v) <= 1e-9);

    const ABMetric sq = square_metric(euclidean_metric(n), testfix::radial_form(n, 0.2, 0.05));
    double worst = 0;
    for (double v : douglas(sq, x, y)) worst = std::max(worst, std::abs(v));
    CHECK(worst > 1e-6);
}

TEST_CASE("generic curved metric is not projectively trivial") {
    const int n = 3;
    ABMetric m;
    m.dim = n;
    m.a = testfix::lumpy_metric(n);
    m.b = constant_form({0.0, 0.0, 0.0});
    m.phi = PhiSolution::riemannian();
    const CurvatureBundle c = weyl(m, {0.2, 0.1, -0.15}, {0.7, -0.4, 0.5});
    double worst = 0;
    for (double v : c.W) worst = std::max(worst, std::abs(v));
    CHECK(worst > 1e-4);
}

TEST_CASE("flag curvature extraction identifies a fabricated bundle") {
    CurvatureBundle c;
    c.n = 3;
    c.y = {1.0, 2.0, -1.0};
    c.F = 2.0;
    c.Fy = {0.4, 0.5, 0.6};
    const double K0 = 0.37;
    c.R.assign(9, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            c.R[3 * i + k] = K0 * (c.F * c.F * (i == k ? 1.0 : 0.0) - c.F * c.y[i] * c.Fy[k]);
    const FlagExtraction fx = extract_flag_curvature(c);
    CHECK(fx.K == doctest::Approx(K0).epsilon(1e-14));
    CHECK(fx.residual < 1e-14);
}

TEST_CASE("coupling constants, frozen values") {
    const ABParams p{2.0, 0.0, -3.0, 2.0};
    const ProjFlatData d = projflat_couplings(p, 0.25, 0.3, -0.2);
    CHECK(d.eta == doctest::Approx(1.22).epsilon(1e-14));
    CHECK(d.q == doctest::Approx(-0.52).epsilon(1e-14));
}

TEST_CASE("scalar flag formula: branches agree away from the pole") {
    Rng rng(512);
    int tried = 0;
    while (tried < 200) {
        ABParams p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                   rng.uniform(-1.5, 1.5)};
        if (std::abs(p.k2 - p.k1 * p.k3) < 1e-3) continue;
        ++tried;
        const std::array<double, 3> phi = {rng.uniform(0.5, 2.0), rng.uniform(-1, 1),
                                           rng.uniform(-1, 1)};
        const double b2 = rng.uniform(0.0, 0.8);
        const double tau = rng.uniform(-0.5, 0.5);
        const double lambda = rng.uniform(-0.5, 0.5);
        double s = rng.uniform(1e-2, 0.9);
        if (rng.uniform() < 0.5) s = -s;
        if (tried % 4 == 0) s = (s < 0 ? -1 : 1) * rng.uniform(1e-2, 2e-2); // near the switch
        const double direct = scalar_flag_formula_branch(p, phi, s, b2, tau, lambda, true);
        const double series = scalar_flag_formula_branch(p, phi, s, b2, tau, lambda, false);
        CHECK(std::abs(direct - series) <= 1e-9 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("scalar flag formula at s = 0") {
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
        ABParams p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                   rng.uniform(-1.5, 1.5)};
        const double b2 = rng.uniform(0.0, 0.8);
        const double tau = rng.uniform(-0.5, 0.5);
        const double lambda = rng.uniform(-0.5, 0.5);
        const double K = scalar_flag_formula(p, {1.0, p.a1, p.k1}, 0.0, b2, tau, lambda);
        const double want =
            lambda + (p.k1 * p.k1 * b2 + p.k1 + 0.75 * p.a1 * p.a1) * tau * tau;
        CHECK(K == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("pattern fits are inert on flat data") {
    const int n = 3;
    const MetricField a = euclidean_metric(n);
    const OneFormField b = constant_form({0.3, -0.1, 0.2});
    const ABParams p{2.0, 0.0, -3.0, 2.0};

    const BetaDerivedTensors t = beta_tensors(a, b, {0.1, 0.2, 0.3});
    CHECK(fit_tau(t, p) == 0.0);

    std::vector<Point> ys = {{1, 0.2, -0.3}, {0.1, 1, 0.4}, {-0.5, 0.3, 1}};
    const auto le = fit_lambda_eta(a, b, p, {0.1, 0.2, 0.3}, ys);
    CHECK(le[0] == 0.0);
    CHECK(le[1] == 0.0);

    ScalarField zero;
    zero.dim = n;
    zero.eval = [](const std::vector<Jet>& x) { return Jet::constant(x[0].space_ptr(), 0.0); };
    const CondResiduals res = projflat_conditions_check(a, b, p, zero, zero, {0.1, 0.2, 0.3}, ys);
    CHECK(res.cov == 0.0);
    CHECK(res.curv == 0.0);
    CHECK(res.grad == 0.0);
}

TEST_CASE("square closed curvature collapses to its short form") {
    // for phi = (1+s)^2 the general closed form reduces to
    //   K = {[lambda + tau^2 (5 + 4 b^2)] + (eta/2 - 3 tau^2) s} / phi^2
    const PhiSolution phi = PhiSolution::closed_square();
    const ABParams p = phi.params();
    Rng rng(501);
    for (int t = 0; t < 100; ++t) {
        const double b2 = rng.uniform(0.0, 0.8);
        const double tau = rng.uniform(-0.6, 0.6);
        const double lambda = rng.uniform(-0.8, 0.8);
        const double s = rng.uniform(-0.85, 0.85);
        const double eta = projflat_couplings(p, b2, tau, lambda).eta;
        const double ph = (1 + s) * (1 + s);
        const double want =
            (lambda + tau * tau * (5 + 4 * b2) + (0.5 * eta - 3 * tau * tau) * s) / (ph * ph);
        const double got = scalar_flag_formula(phi, s, b2, tau, lambda);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
    // tau = 0 leaves the constant-curvature value
    CHECK(scalar_flag_formula(phi, 0.0, 0.3, 0.0, 0.7) == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("projective flatness verdict separates flat from lumpy") {
    const int n = 3;
    Rng rng(502);
    std::vector<Point> xs, ys;
    for (int k = 0; k < 6; ++k) {
        Point x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(-0.3, 0.3);
            y[i] = rng.uniform(-1, 1) + (i == 0 ? 1.5 : 0);
        }
        xs.push_back(x);
        ys.push_back(y);
    }

    const ABMetric flat = square_metric(euclidean_metric(n), constant_form({0.25, 0.0, 0.1}));
    const ProjFlatVerdict ok = proj_flat_verdict(flat, xs, ys);
    CHECK(ok.pass);
    CHECK(ok.max_weyl < 1e-9);
    CHECK(ok.max_douglas < 1e-9);

    const ABMetric bad = square_metric(euclidean_metric(n), testfix::radial_form(n, 0.25, 0.05));
    const ProjFlatVerdict no = proj_flat_verdict(bad, xs, ys);
    CHECK_FALSE(no.pass);
    CHECK(no.max_douglas > 1e-6);
}
