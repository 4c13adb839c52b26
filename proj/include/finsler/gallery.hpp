#ifndef FINSLER_GALLERY_HPP
#define FINSLER_GALLERY_HPP

#include "finsler/deform.hpp"
#include "finsler/metric.hpp"
#include "finsler/rng.hpp"

namespace finsler {

// Explicit model geometries: the constant-curvature chart metric, its closed
// conformal forms, and the metric families built from them.

// Chart data for the conformal scalar c = (-k + mu <a,x>)/(2 sqrt(1+mu|x|^2))
// on the mu space form.
struct NavigationData {
    int n = 3;
    double mu = 1.0;
    double k = 0.0;
    Point a; // size n; empty means zero
};

// Sampling stays well inside the chart and the regularity window.
double chart_radius(double mu); // min(0.5, 0.5/sqrt(|mu|))
Point random_chart_point(int n, double mu, Rng& rng);

// h_ij = {(1+mu|x|^2) d_ij - mu x_i x_j}/(1+mu|x|^2)^2, sectional curvature mu.
MetricField space_form_metric(double mu, int n);
double h_mu(double mu, const Point& x, const Point& y); // DomainError off the chart

// c(x) and its closed 1-form
//   p_i = {(k - mu <a,x>) x_i + (1+mu|x|^2) a_i}/(1+mu|x|^2)^{3/2},
// which equals (2/mu) dc.  |p|^2_h has the closed value
//   |a|^2 + (k^2|x|^2 + 2k<a,x> - mu <a,x>^2)/(1+mu|x|^2).
ScalarField conformal_scalar(const NavigationData& nd);
OneFormField conformal_form(const NavigationData& nd);
double conformal_p2_closed(const NavigationData& nd, const Point& x);

// delta = sqrt(|grad c|^2_h + mu c^2), a constant of the data for n >= 3;
// measured at sample points, mean returned.  ConstancyError past 1e-6
// relative deviation.
struct DeltaReport {
    double delta = 0;
    double max_rel_dev = 0;
};
DeltaReport conformal_delta(const NavigationData& nd, Rng& rng, int points = 20);

// The family metric recovered from (h, rho = (2/mu) dc) through the inverse
// deformation along the chosen triple; tau = -2 u c/w and the lambda bound to
// it ride along as fields for the structure-equation checks.  k1_weight picks
// which parameter weights b^2 in the lambda correction (see lambda_from_mu).
struct FamilyBuild {
    ABMetric metric;
    ScalarField tau, lambda, b2;
    double mu = 0;
};
FamilyBuild family_from_navigation(const NavigationData& nd, const ABParams& p,
                                   const TripleSource& T, bool k1_weight = true);

// The quadratic family phi = 1 + a1 s + eps s^2 built in closed form:
//   omega = mu/4 + eps delta^2/mu - eps c^2,
//   a_ij = (4/mu)^2 omega^2 h_ij,   b_i = 4 mu^{-3/2} sqrt(omega) c_i,
// with b^2 = p^2/(1 + eps p^2), p^2 = 4(delta^2 - mu c^2)/mu^2.  omega <= 0
// anywhere touched raises DomainError (the regularity window).
struct QuadraticBuild {
    ABMetric metric;
    ScalarField tau, lambda, b2;
    double delta = 0;
    double mu = 0;
    double a1 = 2, eps = 1;
};
QuadraticBuild quadratic_from_navigation(const NavigationData& nd, double a1, double eps,
                                         Rng& rng, bool k1_weight = true);

// Closed-form flag curvature of the quadratic family at one sample, as a
// function of the invariants (delta, c(x), s = beta/alpha):
//   K = {6 mu (a1^2-4e)(1-e s^2)^2 c^2
//        + (mu^2+4e delta^2)(a1 e s^3+6e s^2+3 a1 s+2)(1+a1 s+e s^2)}
//       / {128 mu^{-2} omega^3 (1+a1 s+e s^2)^4}.
// The square case (a1=2, e=1) collapses to
//   K = (delta^2/mu + mu/4) mu^3 / {16 [(1+s)(delta^2/mu + mu/4 - c^2)]^3},
// pinched between (sqrt(4 delta^2+mu^2) -+ 2 delta)^3/(mu sqrt(4 delta^2+mu^2)).
struct ClosedK {
    double K = 0;
    double lower = 0, upper = 0;
    bool has_bounds = false;
};
ClosedK closed_flag_curvature(double mu, double delta, double c, double s, double a1,
                              double eps);
ClosedK closed_flag_curvature_square(double mu, double delta, double c, double s);

// The projectively flat pair on the unit disk whose geodesics are straight
// lines: aB_ij = {(1-|x|^2) d_ij + x_i x_j}/(1-|x|^2)^4, bB_i = x_i/(1-|x|^2)^2.
struct SeedPair {
    MetricField a;
    OneFormField b;
};
SeedPair projective_disk_seeds(int n);

// Zero-curvature member of the closed family: the seeds reshaped by the
// derived constants k = k1 - a1^2/2, e = a1/2 so that F = alpha phi(beta/alpha)
// with the zero-curvature phi.  Requires a1 != 0.
ABMetric zero_curvature_metric(double k1, double a1, const SeedPair& seeds);

} // namespace finsler

#endif
