#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsler/ode.hpp"
#include "finsler/phi_ode.hpp"

using namespace finsler;

TEST_CASE("dopri5 hits tight tolerances on a stiff-free classic") {
    Dopri5 ode([](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy[0] = -y[0];
    });
    const auto sol = ode.integrate(0.0, 1.0, {1.0});
    CHECK(sol.y.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    Dopri5 osc([](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy[0] = y[1];
        dy[1] = -y[0];
    });
    const auto s2 = osc.integrate(0.0, 3.141592653589793, {1.0, 0.0});
    CHECK(s2.y.back()[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(s2.y.back()[1] == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("first quartic root") {
    CHECK(first_quartic_root({2, 0, -3, 2}) == doctest::Approx(1.0));        // 1 - s^2
    CHECK(std::isinf(first_quartic_root({-2, 0, 3, 0})));                    // 1 + s^2
    CHECK(std::isinf(first_quartic_root({1, 1.0 / 8, -1.0 / 4, 1})));        // complex pair
    CHECK(first_quartic_root({0, -1, 0, 0}) == doctest::Approx(1.0));        // 1 - s^4
}

TEST_CASE("zero-curvature family constants, frozen by hand") {
    const auto c22 = zero_curvature_constants(2, 2);
    CHECK(c22.k2 == doctest::Approx(0.0).scale(1.0));
    CHECK(c22.k3 == doctest::Approx(-3.0));
    CHECK(c22.k == doctest::Approx(0.0).scale(1.0));
    CHECK(c22.eps == doctest::Approx(1.0));

    const auto c11 = zero_curvature_constants(1, 1);
    CHECK(c11.k2 == doctest::Approx(1.0 / 8));
    CHECK(c11.k3 == doctest::Approx(-1.0 / 4));
    CHECK(c11.k == doctest::Approx(1.0 / 2));
    CHECK(c11.eps == doctest::Approx(1.0 / 2));
}

TEST_CASE("closed forms satisfy the family ODE with jet-supplied derivatives") {
    for (const auto& phi : {PhiSolution::closed_square(),
                            PhiSolution::closed_quadratic(1.3, 1.0),
                            PhiSolution::closed_quadratic(0.5, -1.0),
                            PhiSolution::closed_zero_curvature(2, 2),
                            PhiSolution::closed_zero_curvature(1, 1)}) {
        for (double s = -0.6; s <= 0.6; s += 0.1)
            CHECK(std::abs(phi.ode_residual(s)) < 1e-12);
    }
}

TEST_CASE("numeric solve reproduces the square closed form to 1e-10") {
    const PhiSolution num = solve_phi({2, 0, -3, 2});
    const PhiSolution closed = PhiSolution::closed_square();
    CHECK(num.domain() == doctest::Approx(0.9)); // 0.9 * root at s=1
    double sup = 0;
    for (int i = 0; i <= 140; ++i) {
        const double s = -0.7 + i * 0.01;
        const auto a = num.eval(s);
        const auto b = closed.eval(s);
        sup = std::max({sup, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
    }
    CHECK(sup < 1e-10);
}

TEST_CASE("numeric solve reproduces both quadratic branches to 1e-10") {
    struct Case { double a1, eps; };
    for (const auto& c : {Case{1.3, 1.0}, Case{0.5, -1.0}}) {
        const PhiSolution num = solve_phi({2 * c.eps, 0, -3 * c.eps, c.a1});
        const PhiSolution closed = PhiSolution::closed_quadratic(c.a1, c.eps);
        double sup = 0;
        for (int i = 0; i <= 140; ++i) {
            const double s = -0.7 + i * 0.01;
            const auto a = num.eval(s);
            const auto b = closed.eval(s);
            sup = std::max({sup, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
        }
        CHECK(sup < 1e-10);
    }
}

TEST_CASE("numeric solve reproduces the zero-curvature closed form") {
    const PhiSolution closed = PhiSolution::closed_zero_curvature(1, 1);
    const PhiSolution num = solve_phi(closed.params());
    double sup = 0;
    for (int i = 0; i <= 180; ++i) {
        const double s = -0.9 + i * 0.01;
        const auto a = num.eval(s);
        const auto b = closed.eval(s);
        sup = std::max({sup, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
    }
    CHECK(sup < 1e-10);
}

TEST_CASE("initial data invariants: phi(0)=1, phi'(0)=a1, phi''(0)=k1") {
    for (const auto& phi : {solve_phi({2, 0, -3, 2}), solve_phi({1, 1.0 / 8, -1.0 / 4, 0.7}),
                            PhiSolution::closed_zero_curvature(1.5, 1)}) {
        const auto v = phi.eval(0.0);
        CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(v[1] == doctest::Approx(phi.params().a1).epsilon(1e-13).scale(1.0));
        CHECK(v[2] == doctest::Approx(phi.params().k1).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("series expansion matches pointwise evaluation nearby") {
    const PhiSolution phi = solve_phi({1, 1.0 / 8, -1.0 / 4, 0.7});
    const auto c = phi.series_at(0.3, 12);
    for (double u : {-0.04, -0.01, 0.02, 0.05}) {
        double f = 0;
        for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) f = f * u + c[m];
        CHECK(f == doctest::Approx(phi.eval(0.3 + u)[0]).epsilon(1e-12));
    }
}

TEST_CASE("Randers-type degeneracy is refused") {
    CHECK_THROWS_AS(solve_phi({2, -6, -3, 1}), RandersDegenerateError); // k2 == k1*k3
    CHECK_THROWS_AS((ABParams{1, 0.25, 0.25, 1}).validate(), RandersDegenerateError);
    CHECK_NOTHROW((ABParams{2, 0, -3, 2}).validate());
}

TEST_CASE("evaluation outside the validity radius is a domain error") {
    const PhiSolution num = solve_phi({2, 0, -3, 2}); // radius 0.9
    CHECK_THROWS_AS(num.eval(0.95), DomainError);
    CHECK_NOTHROW(num.eval(0.9));
}

TEST_CASE("regularity margins") {
    const auto ok = regularity_check(PhiSolution::closed_square(), 0.95);
    CHECK(ok.ok);
    CHECK(ok.min_margin > 0);

    // 1 + a1 s + eps s^2 with eps = -1 needs b^2 < 1/2
    const auto bad = regularity_check(PhiSolution::closed_quadratic(0.0, -1.0), 0.8);
    CHECK_FALSE(bad.ok);
    // binding constraint is b^2 < 1/2; here 1 + k1 b^2 and the convexity
    // margin at s = 0 both equal 1 - 2 b^2
    CHECK(bad.min_margin == doctest::Approx(1 - 2 * 0.64));
    CHECK_FALSE(bad.failed_condition.empty());
    const auto good = regularity_check(PhiSolution::closed_quadratic(0.0, -1.0), 0.65);
    CHECK(good.ok);

    CHECK_THROWS_AS(regularity_check(solve_phi({2, 0, -3, 2}), 0.95), DomainError);
}
