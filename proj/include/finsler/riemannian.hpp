#ifndef FINSLER_RIEMANNIAN_HPP
#define FINSLER_RIEMANNIAN_HPP

#include <vector>

#include "finsler/fields.hpp"

namespace finsler {

// Christoffel symbols of the second kind at x, flattened as [i][j][k]:
// Gamma^i_{jk} = 1/2 a^{il} (d_j a_lk + d_k a_lj - d_l a_jk).
std::vector<double> christoffel(const MetricField& g, const Point& x);

// Geodesic spray coefficients G^i = 1/2 Gamma^i_{jk} y^j y^k; geodesics
// solve x'' = -2 G(x, x').
std::vector<double> alpha_spray(const MetricField& g, const Point& x, const Point& y);

// Covariant data of a 1-form along the metric: everything downstream checks
// consume at a point, as plain numbers.
struct BetaDerivedTensors {
    double b2 = 0;               // a^{ij} b_i b_j
    std::vector<double> b;       // b_i
    std::vector<double> bu;      // b^i = a^{ij} b_j
    std::vector<double> a;       // a_ij values
    std::vector<double> ainv;    // a^{ij} values
    std::vector<double> nabla;   // b_{i|j}, [i][j]
    std::vector<double> r, s;    // symmetric / antisymmetric parts, [i][j]
    std::vector<double> rl, sl;  // r_j = b^i r_ij,  s_j = b^i s_ij
};
BetaDerivedTensors beta_tensors(const MetricField& g, const OneFormField& b, const Point& x);

// Curvature of a spray from its coefficient jets:
//   R^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
//           - dG^i/dy^j dG^j/dy^k.
// G must be valid to at least (1, 2); the result is valid to
// (valid_x - 1, valid_y - 2).  cy are the fiber coordinate jets.
std::vector<Jet> spray_curvature(const std::vector<Jet>& G, const std::vector<Jet>& cy);

// Spray coefficients of a Riemannian metric as jets in the given space.
std::vector<Jet> alpha_spray_jets(const MetricField& g, const JetSpace* sp, const Point& x,
                                  const Point& y);

// R^i_k values of the metric's geodesic spray at (x, y), flattened [i][k].
std::vector<double> riemann_alpha(const MetricField& g, const Point& x, const Point& y);

// Fit of R^i_k against the constant-curvature shape mu (alpha^2 d^i_k - y^i y_k).
struct SpaceFormReport {
    double max_residual = 0;  // max over samples vs the supplied mu, scaled
    double mu_fit_mean = 0;   // per-sample least-squares mu, averaged
    double mu_fit_spread = 0; // max - min of the per-sample fits
};
SpaceFormReport check_space_form(const MetricField& g, double mu,
                                 const std::vector<Point>& xs, const std::vector<Point>& ys);

} // namespace finsler

#endif
