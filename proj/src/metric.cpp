#include "finsler/metric.hpp"

#include <cmath>

#include "finsler/linalg.hpp"

namespace finsler {

namespace {

// Shared jet assembly: coordinate jets, alpha, beta, s, F^2, fundamental
// tensor and (optionally) the spray coefficients, all in one space whose
// truncation orders the caller picks to match what it will differentiate.
struct Pipeline {
    const JetSpace* sp = nullptr;
    int n = 0;
    std::vector<Jet> cx, cy;
    Jet alpha, beta, s, F, F2;
    std::vector<Jet> g, ginv, G;
};

Pipeline build_pipeline(const ABMetric& m, const Point& x, const Point& y, int ox, int oy,
                        bool need_spray) {
    Pipeline P;
    P.n = m.dim;
    P.sp = JetSpace::make(P.n, P.n, ox, oy);
    P.cx = coordinate_jets(P.sp, x);
    P.cy.reserve(P.n);
    for (int i = 0; i < P.n; ++i) P.cy.push_back(Jet::coordinate(P.sp, P.n + i, y[i]));

    const std::vector<Jet> A = m.a.eval(P.cx);
    const std::vector<Jet> bj = m.b.eval(P.cx);

    Jet alpha2 = Jet::constant(P.sp, 0.0);
    for (int i = 0; i < P.n; ++i) {
        Jet row = Jet::constant(P.sp, 0.0);
        for (int j = 0; j < P.n; ++j) row.add_product(A[P.n * i + j], P.cy[j]);
        alpha2.add_product(row, P.cy[i]);
    }
    P.alpha = finsler::sqrt(alpha2);
    P.beta = Jet::constant(P.sp, 0.0);
    for (int i = 0; i < P.n; ++i) P.beta.add_product(bj[i], P.cy[i]);
    P.s = P.beta / P.alpha;

    const auto series =
        m.phi.series_at(P.s.value(), P.s.valid_x() + P.s.valid_y() + 1);
    const Jet phi = P.s.compose(series);
    P.F = P.alpha * phi;
    P.F2 = P.F * P.F;

    std::vector<Jet> dy(P.n, Jet());
    for (int l = 0; l < P.n; ++l) dy[l] = P.F2.derivative(P.n + l);
    P.g.assign(static_cast<std::size_t>(P.n) * P.n, Jet());
    for (int i = 0; i < P.n; ++i)
        for (int j = i; j < P.n; ++j) {
            P.g[P.n * i + j] = 0.5 * dy[i].derivative(P.n + j);
            if (j > i) P.g[P.n * j + i] = P.g[P.n * i + j];
        }

    if (need_spray) {
        P.ginv = adjugate_inverse(P.g, P.n);
        P.G.reserve(P.n);
        for (int i = 0; i < P.n; ++i) {
            Jet acc = Jet::constant(P.sp, 0.0);
            for (int l = 0; l < P.n; ++l) {
                // [F^2]_{x^k y^l} y^k - [F^2]_{x^l}
                Jet bracket = -P.F2.derivative(l);
                for (int k = 0; k < P.n; ++k)
                    bracket += P.cy[k] * dy[l].derivative(k);
                acc.add_product(P.ginv[P.n * i + l], bracket);
            }
            P.G.push_back(0.25 * acc);
        }
    }
    return P;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

std::vector<double> fundamental_tensor(const ABMetric& m, const Point& x, const Point& y) {
    const Pipeline P = build_pipeline(m, x, y, 0, 2, false);
    const int n = m.dim;
    std::vector<double> g(n * n);
    for (int i = 0; i < n * n; ++i) g[i] = P.g[i].value();
    if (!is_positive_definite(g, n))
        throw DegeneracyError("fundamental tensor not positive definite at this sample");
    return g;
}

SprayPair finsler_spray(const ABMetric& m, const Point& x, const Point& y) {
    const int n = m.dim;
    SprayPair out;

    const Pipeline P = build_pipeline(m, x, y, 1, 2, true);
    out.direct.resize(n);
    for (int i = 0; i < n; ++i) out.direct[i] = P.G[i].value();

    // alpha-beta route, plain numbers all the way
    const BetaDerivedTensors t = beta_tensors(m.a, m.b, x);
    const std::vector<double> Ga = alpha_spray(m.a, x, y);
    double alpha2 = 0, beta = 0;
    for (int i = 0; i < n; ++i) {
        beta += t.b[i] * y[i];
        for (int j = 0; j < n; ++j) alpha2 += t.a[n * i + j] * y[i] * y[j];
    }
    const double alpha = std::sqrt(alpha2);
    const double s = beta / alpha;
    const auto ph = m.phi.eval(s);
    const double denom = ph[0] - s * ph[1];
    const double Q = ph[1] / denom;
    const double Qp = ph[2] * ph[0] / (denom * denom);
    const double Delta = 1.0 + s * Q + (t.b2 - s * s) * Qp;
    const double Theta = (Q - s * Qp) / (2 * Delta);
    const double Psi = Qp / (2 * Delta);

    double s0 = 0, r00 = 0;
    std::vector<double> si0(n, 0.0);
    for (int j = 0; j < n; ++j) {
        s0 += t.sl[j] * y[j];
        for (int i = 0; i < n; ++i) {
            r00 += t.r[n * i + j] * y[i] * y[j];
            for (int mi = 0; mi < n; ++mi)
                si0[i] += t.ainv[n * i + mi] * t.s[n * mi + j] * y[j];
        }
    }
    const double common = -2.0 * alpha * Q * s0 + r00;
    out.ab_route.resize(n);
    for (int i = 0; i < n; ++i)
        out.ab_route[i] =
            Ga[i] + alpha * Q * si0[i] + Theta * common * y[i] / alpha + Psi * common * t.bu[i];

    for (int i = 0; i < n; ++i)
        out.max_diff = std::max(out.max_diff, std::abs(out.direct[i] - out.ab_route[i]));
    return out;
}

namespace {

CurvatureBundle curvature_impl(const ABMetric& m, const Point& x, const Point& y, bool with_weyl) {
    const int n = m.dim;
    if (with_weyl && n < 3)
        throw ConfigError("weyl: the projective invariant needs dimension >= 3");
    const Pipeline P = build_pipeline(m, x, y, 2, with_weyl ? 5 : 4, true);
    const std::vector<Jet> R = spray_curvature(P.G, P.cy);

    CurvatureBundle c;
    c.n = n;
    c.y = y;
    c.F = P.F.value();
    c.Fy.resize(n);
    c.g.resize(n * n);
    for (int k = 0; k < n; ++k) c.Fy[k] = P.F.derivative(n + k).value();
    for (int i = 0; i < n * n; ++i) c.g[i] = P.g[i].value();

    c.R.resize(n * n);
    for (int i = 0; i < n * n; ++i) c.R[i] = R[i].value();
    c.ric = 0;
    for (int i = 0; i < n; ++i) c.ric += c.R[n * i + i];
    c.Ry.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) c.Ry[i] += c.R[n * i + k] * y[k];

    if (with_weyl) {
        Jet ric = Jet::constant(P.sp, 0.0);
        for (int i = 0; i < n; ++i) ric += R[n * i + i];
        const Jet Rbar = ric / static_cast<double>(n - 1);
        c.W.assign(n * n, 0.0);
        for (int k = 0; k < n; ++k) {
            double div = 0; // d A^m_k / dy^m
            for (int mi = 0; mi < n; ++mi) {
                Jet A = R[n * mi + k];
                if (mi == k) A -= Rbar;
                div += A.derivative(n + mi).value();
            }
            for (int i = 0; i < n; ++i) {
                double a = c.R[n * i + k] - (i == k ? Rbar.value() : 0.0);
                c.W[n * i + k] = a - div * y[i] / (n + 1);
            }
        }
        c.trW = 0;
        for (int i = 0; i < n; ++i) c.trW += c.W[n * i + i];
    }
    return c;
}

} // namespace

CurvatureBundle riemann_curvature(const ABMetric& m, const Point& x, const Point& y) {
    return curvature_impl(m, x, y, false);
}

CurvatureBundle weyl(const ABMetric& m, const Point& x, const Point& y) {
    return curvature_impl(m, x, y, true);
}

std::vector<double> douglas(const ABMetric& m, const Point& x, const Point& y) {
    const int n = m.dim;
    const Pipeline P = build_pipeline(m, x, y, 1, 6, true);
    Jet tr = Jet::constant(P.sp, 0.0);
    for (int mi = 0; mi < n; ++mi) tr += P.G[mi].derivative(n + mi);

    std::vector<double> D(static_cast<std::size_t>(n) * n * n * n);
    for (int i = 0; i < n; ++i) {
        const Jet Ti = P.G[i] - (1.0 / (n + 1)) * (tr * P.cy[i]);
        for (int h = 0; h < n; ++h) {
            const Jet Th = Ti.derivative(n + h);
            for (int j = 0; j < n; ++j) {
                const Jet Thj = Th.derivative(n + j);
                for (int k = 0; k < n; ++k)
                    D[((h * n + i) * n + j) * n + k] = Thj.derivative(n + k).value();
            }
        }
    }
    return D;
}

FlagExtraction extract_flag_curvature(const CurvatureBundle& c) {
    const int n = c.n;
    double rm = 0, mm = 0;
    std::vector<double> M(n * n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            M[n * i + k] = c.F * c.F * (i == k ? 1.0 : 0.0) - c.F * c.y[i] * c.Fy[k];
            rm += c.R[n * i + k] * M[n * i + k];
            mm += M[n * i + k] * M[n * i + k];
        }
    FlagExtraction out;
    out.K = rm / mm;
    double dev = 0;
    for (int i = 0; i < n * n; ++i) {
        const double d = c.R[i] - out.K * M[i];
        dev += d * d;
    }
    out.residual = std::sqrt(dev / mm);
    return out;
}

ProjFlatData projflat_couplings(const ABParams& p, double b2, double tau, double lambda) {
    ProjFlatData d;
    d.tau = tau;
    d.lambda = lambda;
    const double t2 = tau * tau;
    d.eta = (p.k1 * p.k1 + p.k2 - 2 * p.k1 * p.k3 - p.k1 * (p.k2 - p.k1 * p.k1) * b2) * t2 +
            p.k1 * lambda;
    d.q = (p.k3 - 2 * p.k1 - p.k1 * p.k1 * b2) * t2 - lambda;
    return d;
}

double scalar_flag_formula_branch(const ABParams& p, const std::array<double, 3>& phi,
                                  double s, double b2, double tau, double lambda,
                                  bool direct) {
    const double s2 = s * s;
    const double f = 1 + (p.k1 + p.k3) * s2 + p.k2 * s2 * s2;
    const double g = p.k2 * s2 * s2 - p.k1 * s2 - 2;
    const double h = 3 * p.k2 * s2 - p.k1 + 3 * p.k3;
    const double P = phi[1] / phi[0];
    const double t2 = tau * tau;
    double num;
    if (direct) {
        const double pole1 = (3 - 3 * f + h * s2) * (3 - 3 * f + h * s2) / (s2 * s);
        const double pole2 = (3 + h * s2 - 3 * f) * (3 + h * s2 - 3 * f) / s2;
        num = f * P * ((24 * f * P + pole1 * b2 - 16 * h * s) * t2 + 16 * lambda * s) +
              (8 * (2 * g * h * s2 + 12 * f - 3 * g * g) - g * pole2 * b2) / s2 * t2 -
              16 * lambda * g;
    } else {
        // exact rearrangement: (3 - 3f + h s^2) == -4 k1 s^2 identically
        const double k1sq = 16 * p.k1 * p.k1;
        const double p12 = 12 * p.k3 + (24 * p.k2 - 3 * p.k1 * p.k1) * s2 +
                           6 * p.k1 * p.k2 * s2 * s2 - 3 * p.k2 * p.k2 * s2 * s2 * s2;
        num = f * P * ((24 * f * P + k1sq * s * b2 - 16 * h * s) * t2 + 16 * lambda * s) +
              (16 * g * h + 8 * p12 - k1sq * g * b2) * t2 - 16 * lambda * g;
    }
    return num / (32 * phi[0] * phi[0]);
}

double scalar_flag_formula(const ABParams& p, const std::array<double, 3>& phi, double s,
                           double b2, double tau, double lambda) {
    return scalar_flag_formula_branch(p, phi, s, b2, tau, lambda, std::abs(s) >= 1e-2);
}

double fit_tau(const BetaDerivedTensors& t, const ABParams& p) {
    const int n = static_cast<int>(t.b.size());
    double nm = 0, mm = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double M = (1 + p.k1 * t.b2) * t.a[n * i + j] +
                             (p.k2 * t.b2 + p.k3) * t.b[i] * t.b[j];
            nm += t.nabla[n * i + j] * M;
            mm += M * M;
        }
    return nm / mm;
}

namespace {

// curvature patterns of the structure equation, mixed form [i][k]
void curvature_patterns(const BetaDerivedTensors& t, const Point& y, std::vector<double>& P1,
                        std::vector<double>& P2) {
    const int n = static_cast<int>(t.b.size());
    double alpha2 = 0, beta = 0;
    std::vector<double> ylow(n, 0.0);
    for (int i = 0; i < n; ++i) {
        beta += t.b[i] * y[i];
        for (int j = 0; j < n; ++j) {
            alpha2 += t.a[n * i + j] * y[i] * y[j];
            ylow[i] += t.a[n * i + j] * y[j];
        }
    }
    P1.assign(n * n, 0.0);
    P2.assign(n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            P1[n * i + k] = alpha2 * (i == k ? 1.0 : 0.0) - y[i] * ylow[k];
            P2[n * i + k] = beta * beta * (i == k ? 1.0 : 0.0) + alpha2 * t.bu[i] * t.b[k] -
                            beta * t.bu[i] * ylow[k] - beta * t.b[k] * y[i];
        }
}

} // namespace

std::array<double, 2> fit_lambda_eta(const MetricField& a, const OneFormField& b,
                                     const ABParams&, const Point& x,
                                     const std::vector<Point>& ys) {
    const BetaDerivedTensors t = beta_tensors(a, b, x);
    double p11 = 0, p12 = 0, p22 = 0, r1 = 0, r2 = 0;
    std::vector<double> P1, P2;
    for (const Point& y : ys) {
        const std::vector<double> R = riemann_alpha(a, x, y);
        curvature_patterns(t, y, P1, P2);
        for (std::size_t i = 0; i < R.size(); ++i) {
            p11 += P1[i] * P1[i];
            p12 += P1[i] * P2[i];
            p22 += P2[i] * P2[i];
            r1 += R[i] * P1[i];
            r2 += R[i] * P2[i];
        }
    }
    const double det = p11 * p22 - p12 * p12;
    if (std::abs(det) < 1e-300) throw SingularError("fit_lambda_eta: degenerate patterns");
    return {(r1 * p22 - r2 * p12) / det, (r2 * p11 - r1 * p12) / det};
}

CondResiduals projflat_conditions_check(const MetricField& a, const OneFormField& b,
                                        const ABParams& p, const ScalarField& tau,
                                        const ScalarField& lambda, const Point& x,
                                        const std::vector<Point>& ys) {
    const int n = a.dim;
    const BetaDerivedTensors t = beta_tensors(a, b, x);

    const JetSpace* sp0 = JetSpace::make(n, 0, 0, 0);
    const auto cx0 = coordinate_jets(sp0, x);
    const double tv = tau.eval(cx0).value();
    const double lv = lambda.eval(cx0).value();
    const ProjFlatData cpl = projflat_couplings(p, t.b2, tv, lv);

    CondResiduals res;

    double worst = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double M = (1 + p.k1 * t.b2) * t.a[n * i + j] +
                             (p.k2 * t.b2 + p.k3) * t.b[i] * t.b[j];
            worst = std::max(worst, std::abs(t.nabla[n * i + j] - tv * M));
        }
    res.cov = worst / (1 + max_abs(t.nabla));

    std::vector<double> P1, P2;
    for (const Point& y : ys) {
        const std::vector<double> R = riemann_alpha(a, x, y);
        curvature_patterns(t, y, P1, P2);
        double w = 0;
        for (std::size_t i = 0; i < R.size(); ++i)
            w = std::max(w, std::abs(R[i] - lv * P1[i] - cpl.eta * P2[i]));
        res.curv = std::max(res.curv, w / (1 + max_abs(R)));
    }

    const std::vector<Jet> gt = grad_jets(tau, cx0);
    double gw = 0, gs = 0;
    for (int i = 0; i < n; ++i) {
        gw = std::max(gw, std::abs(gt[i].value() - cpl.q * t.b[i]));
        gs = std::max(gs, std::abs(gt[i].value()));
    }
    res.grad = gw / (1 + gs + std::abs(cpl.q) * max_abs(t.b));
    return res;
}

ProjFlatVerdict proj_flat_verdict(const ABMetric& m, const std::vector<Point>& xs,
                                  const std::vector<Point>& ys, double tol) {
    if (xs.size() != ys.size() || xs.empty())
        throw ConfigError("proj_flat_verdict: need paired samples");
    ProjFlatVerdict v;
    v.tol = tol;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const CurvatureBundle c = weyl(m, xs[k], ys[k]);
        for (double w : c.W) v.max_weyl = std::max(v.max_weyl, std::abs(w));
        for (double d : douglas(m, xs[k], ys[k]))
            v.max_douglas = std::max(v.max_douglas, std::abs(d));
    }
    v.pass = v.max_weyl < tol && v.max_douglas < tol;
    return v;
}

double scalar_flag_formula(const PhiSolution& phi, double s, double b2, double tau,
                           double lambda) {
    return scalar_flag_formula(phi.params(), phi.eval(s), s, b2, tau, lambda);
}

} // namespace finsler
