#ifndef FINSLER_DEFORM_HPP
#define FINSLER_DEFORM_HPP

#include <array>
#include <vector>

#include "finsler/fields.hpp"
#include "finsler/phi_ode.hpp"

namespace finsler {

// Deformation between a projectively flat (alpha, beta) pair and a
// constant-curvature metric h carrying a closed conformal 1-form rho:
//
//   h^2 = u alpha^2 + v beta^2,   rho = w beta,
//
// where (u, v, w) are functions of t = b^2 solving
//
//   u' = (v - k1 u)/f,
//   v' = {u(k2 u - k3 v - 2 k1 v) + 2 v^2}/(u f),
//   w' = w(3v - k3 u - 2 k1 u)/(2 u f),      f(t) = 1 + (k1+k3) t + k2 t^2,
//
// with u != 0, w != 0 on the admissible range.

struct DeformationTriple {
    double t = 0;
    double u = 1, v = 0, w = 1;
    double du = 0, dv = 0, dw = 0; // d/dt
    double sigma = 0;              // log(u)/2 where that makes sense
};

// sigma(t) = 1/2 int_0^t (k2 r + k3)/f(r) dr; closed logarithm when k2 = 0,
// adaptive quadrature (1e-12) otherwise.  DomainError if f has a root in [0,t].
double sigma_of(double t, const ABParams& p);
double sigma_by_quadrature(double t, const ABParams& p); // numeric route, any k2

// The closed solution branch u = e^{2 sigma}, v = (k1+k3+k2 t) u,
// w = sqrt(f) e^{sigma}; derivatives are analytic, so the ODE residuals are
// an independent check, not an identity of the construction.
DeformationTriple triple_explicit(double t, const ABParams& p);

// The v == 0 closed branch u = (1-e t)^2, v = 0, w = sqrt(1-e t); it solves
// the system exactly for the degree-two family k1 = 2e, k2 = 0, k3 = -3e.
DeformationTriple triple_quadratic(double t, double eps);

// Absolute residuals of the three ODEs at T.t.
std::array<double, 3> triple_ode_residual(const DeformationTriple& T, const ABParams& p);

// Taylor coefficients of (u, v, w) about T0.t from the ODE recurrence.
struct TripleSeries {
    std::vector<double> u, v, w;
};
TripleSeries triple_series(const ABParams& p, const DeformationTriple& T0, int count);

// A chosen solution branch, evaluable at any admissible t.
class TripleSource {
public:
    enum class Kind { family, quadratic, ivp };

    static TripleSource family(const ABParams& p);    // triple_explicit branch
    static TripleSource quadratic(const ABParams& p); // v == 0 branch (validates params)
    static TripleSource ivp(const ABParams& p, double u0, double v0, double w0);

    DeformationTriple at(double t) const;
    double t_max() const { return tmax_; } // first admissibility failure (inf if none)
    const ABParams& params() const { return p_; }
    Kind kind() const { return kind_; }

private:
    TripleSource() = default;
    Kind kind_ = Kind::family;
    ABParams p_{};
    double eps_ = 1;
    double tmax_ = 0;
    // accepted integration nodes: (u, v, w) for ivp, sigma for a family
    // branch whose quadrature has no closed form (k2 != 0)
    std::vector<double> node_t_;
    std::vector<std::array<double, 3>> node_uvw_;
    std::vector<double> node_sig_;
};

// Forward deformation at one (x, y) plus jet-capable evaluators for h and rho;
// u, v, w are taken at b^2(x), so x-derivatives flow through the chain rule.
struct DeformedData {
    double h = 0;   // h(x, y)
    double rho = 0; // rho(x, y)
    double b2 = 0;  // |beta|^2_alpha at x
    double p2 = 0;  // |rho|^2_h at x, computed from h and rho directly
    MetricField h_field;
    OneFormField rho_field;
};
DeformedData deform(const MetricField& a, const OneFormField& b, const TripleSource& T,
                    const Point& x, const Point& y);

// Inverse deformation: recover (alpha, beta) from (h, rho).  b^2 solves
// p^2 = w(t)^2 t/(u(t) + v(t) t) by bracketed root-finding (scan at 1e-3,
// bisection, Newton polish); the field evaluators repeat the solve in jets.
struct InvertedData {
    double b2 = 0;
    MetricField a_field;
    OneFormField b_field;
    ScalarField b2_field;
};
InvertedData invert_deform(const MetricField& h, const OneFormField& rho,
                           const TripleSource& T, const Point& x);

// max |p_{i|j} + 2 c h_ij| and max |antisymmetric part| over the samples;
// both must vanish for a closed conformal form.
struct ConformalReport {
    double max_conformal = 0;
    double max_antisym = 0;
};
ConformalReport conformal_check(const MetricField& h, const OneFormField& rho,
                                const ScalarField& c, const std::vector<Point>& xs);

// Residual of the spray transfer
//   G_h^i = G_alpha^i + tau {1/2 (k1 alpha^2 + k2 beta^2) b^i - ((k1 u - v) beta/u) y^i}
// over paired (x, y) samples; max absolute entry.
double spray_relation_check(const MetricField& a, const OneFormField& b, const TripleSource& T,
                            const ScalarField& tau, const std::vector<Point>& xs,
                            const std::vector<Point>& ys);

// lambda from the sectional curvature mu of h and tau:
//   lambda = mu u - {k1 u (2 + k1 b^2) - v}/u tau^2.
// k1_weight=false swaps the parameter weighting b^2 in the correction term to
// k2; the two coincide only when k1 = k2, and diagnostics report both against
// fitted data rather than trusting either.
double lambda_from_mu(const ABParams& p, const DeformationTriple& T, double tau, double mu,
                      bool k1_weight = true);

} // namespace finsler

#endif
