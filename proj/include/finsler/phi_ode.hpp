#ifndef FINSLER_PHI_ODE_HPP
#define FINSLER_PHI_ODE_HPP

#include <array>
#include <string>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

// Coefficients of the second-order family ODE
//
//   {1 + (k1+k3) s^2 + k2 s^4} phi''(s) = (k1 + k2 s^2) {phi(s) - s phi'(s)},
//   phi(0) = 1, phi'(0) = a1.
//
// k2 == k1*k3 collapses the family to a Randers-type metric, which the whole
// deformation theory excludes; validate() refuses it.
struct ABParams {
    double k1 = 0, k2 = 0, k3 = 0, a1 = 0;

    void validate() const {
        if (std::abs(k2 - k1 * k3) < 1e-12)
            throw RandersDegenerateError(
                "k2 == k1*k3: Randers-type degeneracy, family not admissible");
    }
};

// A(s) = 1 + (k1+k3) s^2 + k2 s^4 and its smallest positive root (inf if none).
double quartic_at(const ABParams& p, double s);
double first_quartic_root(const ABParams& p);

// Derived constants for the zero-curvature closed family:
//   k2 = (3/8) a1^4 - (5/4) k1 a1^2 + k1^2,  k3 = k1 - (5/4) a1^2,
//   k  = k1 - a1^2/2,                        eps = a1/2.
struct ZeroCurvatureConstants {
    double k2, k3, k, eps;
};
ZeroCurvatureConstants zero_curvature_constants(double k1, double a1);

enum class PhiKind { closed_square, closed_quadratic, closed_zero_curvature, numeric, riemannian };

// One solution of the family ODE with an explicit validity radius in s.
// Closed kinds evaluate a formula (derivatives come from one-variable jet
// arithmetic, so the ODE residual is a genuine check); the numeric kind
// carries integration nodes and re-expands a local Taylor series on demand.
class PhiSolution {
public:
    PhiSolution() = default; // the phi == 1 fixture

    static PhiSolution closed_square();                      // (1+s)^2
    static PhiSolution closed_quadratic(double a1, double eps); // 1 + a1 s + eps s^2
    static PhiSolution closed_zero_curvature(double k1, double a1);
    static PhiSolution riemannian();                         // phi == 1 fixture

    PhiKind kind() const { return kind_; }
    const ABParams& params() const { return params_; }
    double domain() const { return b0_; } // eval valid on |s| <= domain()

    // phi, phi', phi''; DomainError outside the validity radius.
    std::array<double, 3> eval(double s) const;

    // Taylor coefficients of phi about s0 (count of them), from the ODE
    // recurrence seeded with eval(s0).
    std::vector<double> series_at(double s0, int count) const;

    // A(s) phi'' - (k1 + k2 s^2)(phi - s phi'), evaluated from eval().
    double ode_residual(double s) const;

    std::string kind_name() const;

private:
    friend PhiSolution solve_phi(const ABParams& p);

    PhiKind kind_ = PhiKind::riemannian;
    ABParams params_{};
    double b0_ = 1.0;
    double eps_ = 0, k_ = 0; // closed_zero_curvature / closed_quadratic shape constants

    // numeric kind: merged accepted nodes, s ascending
    std::vector<double> node_s_;
    std::vector<std::array<double, 2>> node_v_; // phi, phi' at node
};

// Integrate the family ODE from s = 0 outward on the admissible radius
//   b0 = min(0.9 * first_quartic_root, 1.0),
// with tolerances tight enough that downstream comparisons at 1e-10 hold.
// Refuses Randers-degenerate parameter sets.
PhiSolution solve_phi(const ABParams& p);

// Taylor coefficients about s0 given phi(s0) and phi'(s0), straight from the
// ODE recurrence.  Shared by every kind; DomainError at a quartic root.
std::vector<double> phi_series_from_ode(const ABParams& p, double s0, double phi0,
                                        double dphi0, int count);

// Positivity margins of the metric-regularity conditions on |s| <= b:
//   phi > 0,  phi - s phi' > 0,  phi - s phi' + (b^2 - s^2) phi'' > 0,
// plus the domain conditions 1 + k1 b^2 > 0 and A(b) > 0.
struct RegularityReport {
    bool ok;
    double min_margin;
    double argmin_s;
    std::string failed_condition; // empty when ok
};
RegularityReport regularity_check(const PhiSolution& phi, double b, int grid = 201);

} // namespace finsler

#endif
