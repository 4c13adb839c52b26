#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "finsler/deform.hpp"
#include "finsler/fd.hpp"
#include "finsler/riemannian.hpp"
#include "finsler/rng.hpp"

#include "fixtures.hpp"

using namespace finsler;

namespace {

const ABParams kGeneric{0.8, 0.9, 0.4, 1.1};  // k2 != k1 k3, k2 != 0
const ABParams kSquare{2.0, 0.0, -3.0, 2.0};

} // namespace

TEST_CASE("closed triples satisfy the deformation system") {
    for (double t : {0.0, 0.1, 0.25, 0.4}) {
        const auto r = triple_ode_residual(triple_explicit(t, kGeneric), kGeneric);
        CHECK(r[0] < 1e-12);
        CHECK(r[1] < 1e-12);
        CHECK(r[2] < 1e-12);
    }
    for (double eps : {1.0, -1.0})
        for (double t : {0.0, 0.2, 0.6}) {
            const auto r = triple_ode_residual(triple_quadratic(t, eps),
                                               ABParams{2 * eps, 0.0, -3 * eps, 2 * eps});
            CHECK(r[0] < 1e-14);
            CHECK(r[1] < 1e-14);
            CHECK(r[2] < 1e-14);
        }
    // square family branch, distinct from the quadratic one: u = (1-t)^3
    const DeformationTriple sq = triple_explicit(0.19, kSquare);
    CHECK(sq.u == doctest::Approx(std::pow(0.81, 3)).epsilon(1e-12));
    CHECK(sq.v == doctest::Approx(-std::pow(0.81, 3)).epsilon(1e-12));
    CHECK(sq.w == doctest::Approx(std::pow(0.81, 2)).epsilon(1e-12));
}

TEST_CASE("a corrupted component is caught by the residual") {
    DeformationTriple T = triple_explicit(0.3, kGeneric);
    T.w *= 1.01;
    const auto r = triple_ode_residual(T, kGeneric);
    CHECK(r[2] > 1e-3);
}

TEST_CASE("sigma: closed logarithm vs quadrature") {
    // k2 = 0 has the closed form; the quadrature must reproduce it
    for (double t : {0.05, 0.19, 0.5}) {
        CHECK(sigma_of(t, kSquare) ==
              doctest::Approx(1.5 * std::log(1.0 - t)).epsilon(1e-14));
        CHECK(sigma_by_quadrature(t, kSquare) ==
              doctest::Approx(sigma_of(t, kSquare)).epsilon(1e-12));
    }
    const ABParams flatsum{1.0, 0.0, -1.0, 0.5}; // k1 + k3 = 0 degenerate logarithm
    CHECK(sigma_of(0.3, flatsum) == doctest::Approx(0.5 * (-1.0) * 0.3).epsilon(1e-14));
    CHECK(sigma_by_quadrature(0.3, flatsum) ==
          doctest::Approx(sigma_of(0.3, flatsum)).epsilon(1e-12));
    CHECK_THROWS_AS(sigma_of(1.0, kSquare), DomainError);
}

TEST_CASE("local series reproduces the closed triple") {
    const DeformationTriple T0 = triple_explicit(0.3, kGeneric);
    const TripleSeries S = triple_series(kGeneric, T0, 10);
    CHECK(S.u[1] == doctest::Approx(T0.du).epsilon(1e-12));
    CHECK(S.v[1] == doctest::Approx(T0.dv).epsilon(1e-12));
    CHECK(S.w[1] == doctest::Approx(T0.dw).epsilon(1e-12));
    for (double d : {-0.04, 0.02, 0.05}) {
        const DeformationTriple T1 = triple_explicit(0.3 + d, kGeneric);
        double u = 0, v = 0, w = 0;
        for (int k = 9; k >= 0; --k) {
            u = u * d + S.u[k];
            v = v * d + S.v[k];
            w = w * d + S.w[k];
        }
        CHECK(u == doctest::Approx(T1.u).epsilon(1e-10));
        CHECK(v == doctest::Approx(T1.v).epsilon(1e-10));
        CHECK(w == doctest::Approx(T1.w).epsilon(1e-10));
    }
}

TEST_CASE("the three sources agree where they overlap") {
    // family source with k2 != 0 evaluates sigma from stored nodes
    const TripleSource F = TripleSource::family(kGeneric);
    for (double t : {0.01, 0.2, 0.37}) {
        const DeformationTriple a = F.at(t);
        const DeformationTriple b = triple_explicit(t, kGeneric);
        CHECK(a.u == doctest::Approx(b.u).epsilon(1e-12));
        CHECK(a.v == doctest::Approx(b.v).epsilon(1e-12));
        CHECK(a.w == doctest::Approx(b.w).epsilon(1e-12));
        CHECK(a.du == doctest::Approx(b.du).epsilon(1e-11));
    }
    // an ivp started on the family branch stays on it
    const TripleSource I =
        TripleSource::ivp(kGeneric, 1.0, kGeneric.k1 + kGeneric.k3, 1.0);
    for (double t : {0.1, 0.33}) {
        const DeformationTriple a = I.at(t);
        const DeformationTriple b = triple_explicit(t, kGeneric);
        CHECK(a.u == doctest::Approx(b.u).epsilon(1e-10));
        CHECK(a.v == doctest::Approx(b.v).epsilon(1e-10));
        CHECK(a.w == doctest::Approx(b.w).epsilon(1e-10));
    }
    CHECK_THROWS_AS(TripleSource::quadratic(kGeneric), ConfigError);
}

TEST_CASE("forward deformation: norm identity and the quadratic shortcut") {
    const int n = 3;
    const MetricField a = testfix::lumpy_metric(n);
    const OneFormField b = testfix::radial_form(n, 0.45, 0.1);
    const Point x = {0.25, -0.1, 0.3};
    const Point y = {0.9, 0.4, -0.6};

    const TripleSource F = TripleSource::family(kGeneric);
    const DeformedData d = deform(a, b, F, x, y);
    CHECK(d.b2 == doctest::Approx(beta_tensors(a, b, x).b2).epsilon(1e-13));
    // |rho|^2_h must equal w^2 t/(u + v t) at t = b^2
    const DeformationTriple tr = F.at(d.b2);
    const double want = tr.w * tr.w * d.b2 / (tr.u + tr.v * d.b2);
    CHECK(d.p2 == doctest::Approx(want).epsilon(1e-10));

    // v == 0 branch: h = (1 - b^2) alpha, rho = sqrt(1 - b^2) beta
    const TripleSource Q = TripleSource::quadratic(kSquare);
    const DeformedData dq = deform(a, b, Q, x, y);
    const BetaDerivedTensors bt = beta_tensors(a, b, x);
    double alpha2 = 0, beta = 0;
    for (int i = 0; i < n; ++i) {
        beta += bt.b[i] * y[i];
        for (int j = 0; j < n; ++j) alpha2 += bt.a[n * i + j] * y[i] * y[j];
    }
    CHECK(dq.h == doctest::Approx((1 - bt.b2) * std::sqrt(alpha2)).epsilon(1e-12));
    CHECK(dq.rho == doctest::Approx(std::sqrt(1 - bt.b2) * beta).epsilon(1e-12));
}

TEST_CASE("deformed fields carry honest derivatives") {
    const int n = 3;
    const MetricField a = testfix::lumpy_metric(n);
    const OneFormField b = testfix::radial_form(n, 0.4, 0.08);
    const TripleSource F = TripleSource::family(kGeneric);
    const Point x = {0.2, -0.15, 0.1};
    const DeformedData d = deform(a, b, F, x, {1, 0, 0});

    const JetSpace* sp = JetSpace::make(n, 0, 2, 0);
    const std::vector<Jet> hj = d.h_field.eval(coordinate_jets(sp, x));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            FdOracle fd([&](const std::vector<double>& q) {
                return testfix::field_entry(d.h_field, q, i, j);
            });
            for (int k = 0; k < n; ++k) {
                std::vector<int> m(n, 0);
                m[k] = 1;
                CHECK(hj[n * i + j].partial(m) ==
                      doctest::Approx(fd.partial(x, m)).epsilon(1e-6));
            }
        }
}

TEST_CASE("inversion undoes the deformation") {
    const int n = 3;
    const MetricField a = testfix::lumpy_metric(n);
    const OneFormField b = testfix::radial_form(n, 0.45, 0.1);
    const Point x = {0.25, -0.1, 0.3};

    for (const TripleSource& T :
         {TripleSource::family(kGeneric), TripleSource::quadratic(kSquare)}) {
        const DeformedData d = deform(a, b, T, x, {1, 0.2, 0});
        const InvertedData inv = invert_deform(d.h_field, d.rho_field, T, x);
        CHECK(inv.b2 == doctest::Approx(d.b2).epsilon(1e-10));

        const JetSpace* sp = JetSpace::make(n, 0, 1, 0);
        const std::vector<Jet> cx = coordinate_jets(sp, x);
        const std::vector<Jet> av = inv.a_field.eval(cx);
        const std::vector<Jet> aw = a.eval(cx);
        const std::vector<Jet> bv = inv.b_field.eval(cx);
        const std::vector<Jet> bw = b.eval(cx);
        std::vector<int> m0(n, 0), m1(n, 0);
        m1[1] = 1;
        for (int i = 0; i < n; ++i) {
            CHECK(bv[i].value() == doctest::Approx(bw[i].value()).epsilon(1e-10));
            CHECK(bv[i].partial(m1) == doctest::Approx(bw[i].partial(m1)).epsilon(1e-8));
            for (int j = 0; j < n; ++j) {
                CHECK(av[n * i + j].value() ==
                      doctest::Approx(aw[n * i + j].value()).epsilon(1e-10));
                CHECK(av[n * i + j].partial(m1) ==
                      doctest::Approx(aw[n * i + j].partial(m1)).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("root finder reproduces the closed b^2 of each branch") {
    const int n = 3;
    const Point x = {0.0, 0.0, 0.0};
    Rng rng(91);
    for (int k = 0; k < 10; ++k) {
        const double c = rng.uniform(0.05, 0.9);
        const MetricField h = euclidean_metric(n);
        const OneFormField rho = constant_form({c, 0.0, 0.0});
        // quadratic branch: P(t) = t/(1 - t), so b^2 = p^2/(1 + p^2)
        const InvertedData q = invert_deform(h, rho, TripleSource::quadratic(kSquare), x);
        CHECK(q.b2 == doctest::Approx(c * c / (1 + c * c)).epsilon(1e-12));
        // family branch: P(t) = t identically
        const InvertedData f = invert_deform(h, rho, TripleSource::family(kGeneric), x);
        CHECK(f.b2 == doctest::Approx(c * c).epsilon(1e-12));
    }
    // out of range: the quadratic branch cannot reach p^2 past its bracket
    CHECK_THROWS_AS(
        invert_deform(euclidean_metric(n), constant_form({5.0, 0.0, 0.0}),
                      TripleSource::quadratic(kSquare), x),
        InversionError);
}

TEST_CASE("conformal check on closed forms") {
    const int n = 3;
    const MetricField h = euclidean_metric(n);
    std::vector<Point> xs = {{0.1, 0.2, -0.1}, {-0.3, 0.05, 0.2}, {0.0, 0.0, 0.0}};

    // rho_i = x_i has rho_{i|j} = d_ij = -2 c h_ij with c = -1/2
    OneFormField rho;
    rho.dim = n;
    rho.eval = [n](const std::vector<Jet>& cx) {
        return std::vector<Jet>(cx.begin(), cx.begin() + n);
    };
    ScalarField c;
    c.dim = n;
    c.eval = [](const std::vector<Jet>& cx) { return Jet::constant(cx[0].space_ptr(), -0.5); };
    const ConformalReport ok = conformal_check(h, rho, c, xs);
    CHECK(ok.max_conformal < 1e-14);
    CHECK(ok.max_antisym < 1e-14);

    // a form with a genuine antisymmetric part fails loudly
    OneFormField twist;
    twist.dim = n;
    twist.eval = [n](const std::vector<Jet>& cx) {
        std::vector<Jet> v;
        v.push_back(cx[1]);
        v.push_back(-1.0 * cx[0]);
        v.push_back(Jet::constant(cx[0].space_ptr(), 0.1));
        return v;
    };
    ScalarField zero;
    zero.dim = n;
    zero.eval = [](const std::vector<Jet>& cx) { return Jet::constant(cx[0].space_ptr(), 0.0); };
    const ConformalReport bad = conformal_check(h, twist, zero, xs);
    CHECK(bad.max_antisym > 0.5);
}

TEST_CASE("spray transfer holds in the parallel case") {
    const int n = 3;
    const MetricField a = euclidean_metric(n);
    const OneFormField b = constant_form({0.4, -0.1, 0.2});
    const TripleSource F = TripleSource::family(kGeneric);
    ScalarField zero;
    zero.dim = n;
    zero.eval = [](const std::vector<Jet>& cx) { return Jet::constant(cx[0].space_ptr(), 0.0); };
    std::vector<Point> xs = {{0.1, 0.0, -0.2}, {0.3, 0.1, 0.2}};
    std::vector<Point> ys = {{1.0, 0.3, -0.4}, {0.2, -1.0, 0.5}};
    CHECK(spray_relation_check(a, b, F, zero, xs, ys) < 1e-9);
}

TEST_CASE("lambda transfer weighting") {
    const DeformationTriple T = triple_explicit(0.3, kGeneric);
    const double tau = 0.25, mu = 0.7;
    const double l1 = lambda_from_mu(kGeneric, T, tau, mu, true);
    const double l2 = lambda_from_mu(kGeneric, T, tau, mu, false);
    const double want1 =
        mu * T.u - (kGeneric.k1 * T.u * (2.0 + kGeneric.k1 * 0.3) - T.v) / T.u * tau * tau;
    CHECK(l1 == doctest::Approx(want1).epsilon(1e-14));
    // the two weightings differ unless k1 == k2
    CHECK(std::abs(l1 - l2) > 1e-6);
    CHECK(lambda_from_mu(kGeneric, T, 0.0, mu, true) == doctest::Approx(mu * T.u));
}
