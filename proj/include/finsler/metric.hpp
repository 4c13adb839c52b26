#ifndef FINSLER_METRIC_HPP
#define FINSLER_METRIC_HPP

#include <array>
#include <vector>

#include "finsler/fields.hpp"
#include "finsler/phi_ode.hpp"
#include "finsler/riemannian.hpp"

namespace finsler {

// F = alpha * phi(beta/alpha) with alpha^2 = a_ij y^i y^j, beta = b_i y^i.
struct ABMetric {
    MetricField a;
    OneFormField b;
    PhiSolution phi;
    int dim = 0;
};

// g_ij = 1/2 [F^2]_{y^i y^j} at (x, y); DegeneracyError when not positive
// definite.
std::vector<double> fundamental_tensor(const ABMetric& m, const Point& x, const Point& y);

// Spray coefficients computed two independent ways: straight from the
// [F^2] derivatives, and through the alpha-beta decomposition
//   G^i = G_alpha^i + alpha Q s^i_0 + Theta (-2 alpha Q s_0 + r_00) y^i / alpha
//         + Psi (-2 alpha Q s_0 + r_00) b^i.
// Agreement of the two routes certifies most of the jet plumbing at once.
struct SprayPair {
    std::vector<double> direct;
    std::vector<double> ab_route;
    double max_diff = 0;
};
SprayPair finsler_spray(const ABMetric& m, const Point& x, const Point& y);

// Curvature data at one (x, y).  W is filled only by weyl(); the flag-pole
// contraction R^i_k y^k and the trace of W are identities of the
// construction and certify the pipeline numerically.
struct CurvatureBundle {
    int n = 0;
    Point y;
    double F = 0;
    std::vector<double> Fy;  // dF/dy^k
    std::vector<double> g;   // fundamental tensor values
    std::vector<double> R;   // R^i_k
    double ric = 0;
    std::vector<double> Ry;  // R^i_k y^k
    std::vector<double> W;   // W^i_k
    double trW = 0;
};
CurvatureBundle riemann_curvature(const ABMetric& m, const Point& x, const Point& y);
CurvatureBundle weyl(const ABMetric& m, const Point& x, const Point& y); // n >= 3

// Douglas tensor D_h^i_{jk} = d^3/dy^h dy^j dy^k (G^i - G^m_{y^m} y^i/(n+1)),
// flattened [h][i][j][k].
std::vector<double> douglas(const ABMetric& m, const Point& x, const Point& y);

// Least-squares fit of R^i_k = K (F^2 d^i_k - F F_{y^k} y^i); the residual is
// the relative Frobenius distance to that shape, ~0 iff scalar flag curvature
// holds at this sample.
struct FlagExtraction {
    double K = 0;
    double residual = 0;
};
FlagExtraction extract_flag_curvature(const CurvatureBundle& c);

// The couplings tied to tau and lambda:
//   eta = {k1^2 + k2 - 2 k1 k3 - k1 (k2 - k1^2) b^2} tau^2 + k1 lambda,
//   q   = (k3 - 2 k1 - k1^2 b^2) tau^2 - lambda.
struct ProjFlatData {
    double tau = 0, lambda = 0, eta = 0, q = 0;
};
ProjFlatData projflat_couplings(const ABParams& p, double b2, double tau, double lambda);

// Closed-form scalar flag curvature of the projectively flat families,
// with f = 1 + (k1+k3) s^2 + k2 s^4, g = k2 s^4 - k1 s^2 - 2,
// h = 3 k2 s^2 - k1 + 3 k3.  Near s = 0 the literal formula divides by s^3;
// the second branch substitutes the exact polynomial identities
//   (3 - 3f + h s^2)^2 = 16 k1^2 s^4,
//   (12 f - 3 g^2)/s^2 = 12 k3 + (24 k2 - 3 k1^2) s^2 + 6 k1 k2 s^4 - 3 k2^2 s^6
// and is singularity free; the two agree to ~1e-13 at the switch.
double scalar_flag_formula(const ABParams& p, const std::array<double, 3>& phi, double s,
                           double b2, double tau, double lambda);
double scalar_flag_formula_branch(const ABParams& p, const std::array<double, 3>& phi,
                                  double s, double b2, double tau, double lambda,
                                  bool direct);

// Residuals of the three structure equations at one x:
//   cov : b_{i|j} = tau {(1 + k1 b^2) a_ij + (k2 b^2 + k3) b_i b_j}
//   curv: Rbar^i_k = lambda (alpha^2 d^i_k - y^i y_k)
//                    + eta (beta^2 d^i_k + alpha^2 b^i b_k - beta b^i y_k - beta b_k y^i)
//   grad: tau_{x^i} = q b_i
// each scaled by (1 + max |lhs|) over the supplied y samples.
struct CondResiduals {
    double cov = 0, curv = 0, grad = 0;
};
CondResiduals projflat_conditions_check(const MetricField& a, const OneFormField& b,
                                        const ABParams& p, const ScalarField& tau,
                                        const ScalarField& lambda, const Point& x,
                                        const std::vector<Point>& ys);

// Pattern fits used by diagnostics: tau from the covariant-derivative shape,
// (lambda, eta) from the curvature shape at one (x, y).
double fit_tau(const BetaDerivedTensors& t, const ABParams& p);
std::array<double, 2> fit_lambda_eta(const MetricField& a, const OneFormField& b,
                                     const ABParams& p, const Point& x,
                                     const std::vector<Point>& ys);

// Projective flatness over paired samples: raw maxima of the Weyl and Douglas
// entries, both of which must vanish.  No scale normalisation, so tol is an
// absolute bound.
struct ProjFlatVerdict {
    double max_weyl = 0;
    double max_douglas = 0;
    double tol = 1e-6;
    bool pass = false;
};
ProjFlatVerdict proj_flat_verdict(const ABMetric& m, const std::vector<Point>& xs,
                                  const std::vector<Point>& ys, double tol = 1e-6);

// Same closed form evaluated through a solution object.
double scalar_flag_formula(const PhiSolution& phi, double s, double b2, double tau,
                           double lambda);

} // namespace finsler

#endif
