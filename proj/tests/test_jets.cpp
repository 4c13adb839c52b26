#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "finsler/fd.hpp"
#include "finsler/jet.hpp"
#include "finsler/rng.hpp"

using namespace finsler;

namespace {

// Sparse polynomial with explicit coefficients; its partials are exact, which
// makes it the reference oracle for the lift round trip.
struct Poly {
    struct Term {
        double c;
        std::vector<int> e;
    };
    std::vector<Term> terms;

    double eval(const std::vector<double>& x) const {
        double s = 0;
        for (const auto& t : terms) {
            double m = t.c;
            for (std::size_t v = 0; v < x.size(); ++v)
                for (int k = 0; k < t.e[v]; ++k) m *= x[v];
            s += m;
        }
        return s;
    }

    Jet eval_jet(const std::vector<Jet>& x) const {
        Jet s = Jet::constant(x[0].space_ptr(), 0.0);
        for (const auto& t : terms) {
            Jet m = Jet::constant(x[0].space_ptr(), t.c);
            for (std::size_t v = 0; v < x.size(); ++v)
                for (int k = 0; k < t.e[v]; ++k) m = m * x[v];
            s += m;
        }
        return s;
    }

    // d^m p, term by term: coefficient picks up falling factorials.
    double partial(const std::vector<double>& x, const std::vector<int>& m) const {
        double s = 0;
        for (const auto& t : terms) {
            double c = t.c;
            bool dead = false;
            for (std::size_t v = 0; v < x.size(); ++v) {
                if (t.e[v] < m[v]) { dead = true; break; }
                for (int k = 0; k < m[v]; ++k) c *= t.e[v] - k;
            }
            if (dead) continue;
            for (std::size_t v = 0; v < x.size(); ++v)
                for (int k = 0; k < t.e[v] - m[v]; ++k) c *= x[v];
            s += c;
        }
        return s;
    }
};

Poly random_poly(Rng& rng, int nvars, int degree) {
    Poly p;
    const int nterms = 3 + static_cast<int>(rng.uniform() * 5);
    for (int t = 0; t < nterms; ++t) {
        Poly::Term term;
        term.c = rng.uniform(-2, 2);
        term.e.assign(nvars, 0);
        int budget = degree;
        for (int v = 0; v < nvars; ++v) {
            term.e[v] = static_cast<int>(rng.uniform() * (budget + 1));
            budget -= term.e[v];
        }
        p.terms.push_back(term);
    }
    return p;
}

} // namespace

TEST_CASE("coordinate jets carry value and unit slope") {
    const JetSpace* sp = JetSpace::make(2, 0, 3, 0);
    Jet x = Jet::coordinate(sp, 0, 1.5);
    CHECK(x.value() == 1.5);
    CHECK(x.partial({1, 0}) == 1.0);
    CHECK(x.partial({0, 1}) == 0.0);
}

TEST_CASE("cubic monomial second partial equals 6x") {
    auto f = [](const std::vector<Jet>& x) { return x[0] * x[0] * x[0]; };
    Jet j = lift(f, {1.2}, 3);
    CHECK(j.partial({2}) == doctest::Approx(6 * 1.2).epsilon(1e-12));
    CHECK(j.partial({3}) == doctest::Approx(6.0).epsilon(1e-12));

    FdOracle fd([](const std::vector<double>& x) { return x[0] * x[0] * x[0]; });
    CHECK(fd.partial({1.2}, {2}) == doctest::Approx(6 * 1.2).epsilon(1e-6));
}

TEST_CASE("random polynomials: every carried partial is exact") {
    Rng rng(20240817);
    for (int rep = 0; rep < 1000; ++rep) {
        const int nvars = 1 + static_cast<int>(rng.uniform() * 4);
        Poly p = random_poly(rng, nvars, 4);
        std::vector<double> x0(nvars);
        for (auto& v : x0) v = rng.uniform(-1, 1);

        const int order = 3;
        Jet j = lift([&](const std::vector<Jet>& x) { return p.eval_jet(x); }, x0, order);
        const JetSpace& sp = j.space();
        for (int i = 0; i < sp.size(); ++i) {
            const auto m = sp.exponents(i);
            const double want = p.partial(x0, m);
            CHECK(j.partial(m) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("division and sqrt round trips") {
    Rng rng(7);
    const JetSpace* sp = JetSpace::make(3, 0, 3, 0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Jet> x;
        for (int v = 0; v < 3; ++v)
            x.push_back(Jet::coordinate(sp, v, rng.uniform(-0.8, 0.8)));
        Jet a = x[0] * x[1] + 0.3 * x[2];
        Jet b = 2.0 + x[0] * x[0] + 0.5 * x[1];

        Jet q = a / b;
        Jet back = q * b;
        for (int i = 0; i < sp->size(); ++i)
            CHECK(back.coeff(i) == doctest::Approx(a.coeff(i)).epsilon(1e-13).scale(1.0));

        Jet r = sqrt(b);
        Jet sq = r * r;
        for (int i = 0; i < sp->size(); ++i)
            CHECK(sq.coeff(i) == doctest::Approx(b.coeff(i)).epsilon(1e-13).scale(1.0));
    }
}

TEST_CASE("composition against the finite-difference oracle") {
    // exp(g(x)) differentiated through compose() vs nested central differences
    auto g = [](const std::vector<double>& x) {
        return 0.4 * x[0] * x[0] - 0.7 * x[0] * x[1] + 0.2 * x[1];
    };
    auto gj = [](const std::vector<Jet>& x) {
        return 0.4 * (x[0] * x[0]) - 0.7 * (x[0] * x[1]) + 0.2 * x[1];
    };
    const std::vector<double> x0{0.35, -0.6};
    Jet inner = lift(gj, x0, 3);
    std::vector<double> series(inner.valid_x() + inner.valid_y() + 1);
    double fk = std::exp(inner.value());
    for (std::size_t k = 0; k < series.size(); ++k) {
        series[k] = fk;
        fk /= static_cast<double>(k + 1);
    }
    Jet outer = inner.compose(series);

    FdOracle fd([&](const std::vector<double>& x) { return std::exp(g(x)); }, 0.01);
    for (const auto& m : {std::vector<int>{1, 0}, {0, 1}, {1, 1}, {2, 0}, {2, 1}}) {
        const double want = fd.partial(x0, m);
        CHECK(outer.partial(m) == doctest::Approx(want).epsilon(2e-7));
    }
}

TEST_CASE("anisotropic truncation keeps blocks independent") {
    const JetSpace* sp = JetSpace::make(1, 1, 1, 2);
    CHECK(sp->find({1, 2}) >= 0);  // x*y^2 inside the box
    CHECK(sp->find({2, 0}) == -1); // x^2 truncated away
    CHECK(sp->find({0, 3}) == -1);

    Jet x = Jet::coordinate(sp, 0, 0.5);
    Jet y = Jet::coordinate(sp, 1, 2.0);
    Jet f = x * y * y;
    CHECK(f.partial({1, 2}) == doctest::Approx(2.0));
    CHECK(f.value() == doctest::Approx(0.5 * 4.0));
}

TEST_CASE("derivative consumes exactly one order in its block") {
    const JetSpace* sp = JetSpace::make(1, 1, 2, 2);
    Jet x = Jet::coordinate(sp, 0, 0.3);
    Jet y = Jet::coordinate(sp, 1, 0.9);
    Jet f = x * x * y * y;

    Jet fx = f.derivative(0);
    CHECK(fx.valid_x() == 1);
    CHECK(fx.valid_y() == 2);
    CHECK(fx.value() == doctest::Approx(2 * 0.3 * 0.81));
    CHECK(fx.partial({1, 0}) == doctest::Approx(2 * 0.81));
    CHECK_THROWS_AS(fx.partial({2, 0}), OrderError);

    Jet fxyy = fx.derivative(1).derivative(1);
    CHECK(fxyy.value() == doctest::Approx(4 * 0.3));
    CHECK_THROWS_AS(fxyy.derivative(1), OrderError);
}

TEST_CASE("partials outside the box are refused, never silently zero") {
    Jet j = lift([](const std::vector<Jet>& x) { return x[0] * x[0]; }, {1.0}, 2);
    CHECK_THROWS_AS(j.partial({3}), OrderError);
}

TEST_CASE("singular guards") {
    const JetSpace* sp = JetSpace::make(1, 0, 2, 0);
    Jet z = Jet::coordinate(sp, 0, 0.0);
    CHECK_THROWS_AS(inverse(z), SingularError);
    CHECK_THROWS_AS(finsler::sqrt(z * z - 1e-20), SingularError);
    CHECK_THROWS_AS(finsler::sqrt(-1.0 * z + (-2.0)), SingularError);
}

TEST_CASE("unsupported orders are a configuration error") {
    CHECK_THROWS_AS(JetSpace::make(2, 0, 9, 0), ConfigError);
    auto f = [](const std::vector<Jet>& x) { return x[0]; };
    CHECK_THROWS_AS(lift(f, {1.0}, 11), ConfigError);
}

TEST_CASE("embed into a smaller mixed space preserves coefficients") {
    const JetSpace* big = JetSpace::make(2, 0, 3, 0);
    const JetSpace* mixed = JetSpace::make(2, 1, 2, 1);

    Jet x0 = Jet::coordinate(big, 0, 0.4);
    Jet x1 = Jet::coordinate(big, 1, -0.7);
    Jet f = x0 * x0 * x1 + 2.0 * x1;
    Jet g = f.derivative(0); // valid (2, 0) in the x block

    Jet e = g.embed(mixed);
    CHECK(e.valid_x() == 2);
    CHECK(e.valid_y() == 1);
    CHECK(e.partial({1, 0, 0}) == doctest::Approx(g.partial({1, 0})));
    CHECK(e.partial({2, 0, 0}) == doctest::Approx(g.partial({2, 0})));
    CHECK(e.partial({0, 0, 1}) == 0.0); // no fiber dependence

    CHECK_THROWS_AS(f.derivative(0).derivative(0).embed(big), OrderError);
}

TEST_CASE("lift with an active subset treats the rest as frozen") {
    auto f = [](const std::vector<Jet>& x) { return x[0] * x[1]; };
    Jet j = lift(f, {2.0, 3.0}, 2, {0});
    CHECK(j.value() == doctest::Approx(6.0));
    CHECK(j.partial({1, 0}) == doctest::Approx(3.0));
    CHECK(j.partial({0, 1}) == 0.0); // x1 held constant
}
