#include "finsler/riemannian.hpp"

#include <cmath>

#include "finsler/linalg.hpp"

namespace finsler {

std::vector<Jet> grad_jets(const ScalarField& f, const std::vector<Jet>& x) {
    const JetSpace* sp = x[0].space_ptr();
    const int n = sp->nx();
    const JetSpace* inner = JetSpace::make(n, 0, sp->order_x() + 1, 0);
    std::vector<Jet> xi;
    xi.reserve(n);
    for (int i = 0; i < n; ++i) xi.push_back(Jet::coordinate(inner, i, x[i].value()));
    const Jet fx = f.eval(xi);
    std::vector<Jet> g;
    g.reserve(n);
    for (int i = 0; i < n; ++i) g.push_back(fx.derivative(i).embed(sp));
    return g;
}

std::vector<double> christoffel(const MetricField& g, const Point& x) {
    const int n = g.dim;
    const JetSpace* sp = JetSpace::make(n, 0, 1, 0);
    const std::vector<Jet> a = g.eval(coordinate_jets(sp, x));

    std::vector<double> av(n * n), da(n * n * n); // da[[k]][i][j] = d_k a_ij
    std::vector<int> m(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            av[n * i + j] = a[n * i + j].value();
            for (int k = 0; k < n; ++k) {
                m.assign(n, 0);
                m[k] = 1;
                da[(k * n + i) * n + j] = a[n * i + j].partial(m);
            }
        }
    const std::vector<double> ainv = adjugate_inverse(av, n);

    std::vector<double> gamma(n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double sum = 0;
                for (int l = 0; l < n; ++l)
                    sum += ainv[n * i + l] * (da[(j * n + l) * n + k] +
                                              da[(k * n + l) * n + j] -
                                              da[(l * n + j) * n + k]);
                gamma[(i * n + j) * n + k] = 0.5 * sum;
            }
    return gamma;
}

std::vector<double> alpha_spray(const MetricField& g, const Point& x, const Point& y) {
    const int n = g.dim;
    const std::vector<double> gamma = christoffel(g, x);
    std::vector<double> G(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = 0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) sum += gamma[(i * n + j) * n + k] * y[j] * y[k];
        G[i] = 0.5 * sum;
    }
    return G;
}

BetaDerivedTensors beta_tensors(const MetricField& g, const OneFormField& b, const Point& x) {
    const int n = g.dim;
    BetaDerivedTensors t;
    const JetSpace* sp = JetSpace::make(n, 0, 1, 0);
    const auto cx = coordinate_jets(sp, x);
    const std::vector<Jet> aj = g.eval(cx);
    const std::vector<Jet> bj = b.eval(cx);
    const std::vector<double> gamma = christoffel(g, x);

    t.a.resize(n * n);
    t.b.resize(n);
    for (int i = 0; i < n; ++i) {
        t.b[i] = bj[i].value();
        for (int j = 0; j < n; ++j) t.a[n * i + j] = aj[n * i + j].value();
    }
    t.ainv = adjugate_inverse(t.a, n);

    t.bu.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t.bu[i] += t.ainv[n * i + j] * t.b[j];
    t.b2 = 0;
    for (int i = 0; i < n; ++i) t.b2 += t.bu[i] * t.b[i];

    t.nabla.assign(n * n, 0.0);
    std::vector<int> m(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            m.assign(n, 0);
            m[j] = 1;
            double v = bj[i].partial(m);
            for (int k = 0; k < n; ++k) v -= t.b[k] * gamma[(k * n + i) * n + j];
            t.nabla[n * i + j] = v;
        }

    t.r.resize(n * n);
    t.s.resize(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            t.r[n * i + j] = 0.5 * (t.nabla[n * i + j] + t.nabla[n * j + i]);
            t.s[n * i + j] = 0.5 * (t.nabla[n * i + j] - t.nabla[n * j + i]);
        }
    t.rl.assign(n, 0.0);
    t.sl.assign(n, 0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            t.rl[j] += t.bu[i] * t.r[n * i + j];
            t.sl[j] += t.bu[i] * t.s[n * i + j];
        }
    return t;
}

std::vector<Jet> spray_curvature(const std::vector<Jet>& G, const std::vector<Jet>& cy) {
    const int n = static_cast<int>(G.size());
    const JetSpace* sp = G[0].space_ptr();
    const int nx = sp->nx();

    std::vector<Jet> dGdy(n * n, Jet());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dGdy[n * i + j] = G[i].derivative(nx + j);

    std::vector<Jet> R(n * n, Jet());
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            Jet term = 2.0 * G[i].derivative(k);
            for (int j = 0; j < n; ++j) {
                term -= cy[j] * dGdy[n * i + k].derivative(j);
                term += 2.0 * (G[j] * dGdy[n * i + j].derivative(nx + k));
                term -= dGdy[n * i + j] * dGdy[n * j + k];
            }
            R[n * i + k] = term;
        }
    return R;
}

std::vector<Jet> alpha_spray_jets(const MetricField& g, const JetSpace* sp, const Point& x,
                                  const Point& y) {
    const int n = g.dim;
    const auto cx = coordinate_jets(sp, x);
    std::vector<Jet> cy;
    cy.reserve(n);
    for (int i = 0; i < n; ++i) cy.push_back(Jet::coordinate(sp, n + i, y[i]));

    const std::vector<Jet> a = g.eval(cx);
    Jet a2 = Jet::constant(sp, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a2.add_product(a[n * i + j] * cy[i], cy[j]);

    const std::vector<Jet> ainv = adjugate_inverse(a, n);
    std::vector<Jet> G;
    G.reserve(n);
    for (int i = 0; i < n; ++i) {
        Jet acc = Jet::constant(sp, 0.0);
        for (int l = 0; l < n; ++l) {
            // [a2]_{x^k y^l} y^k - [a2]_{x^l}
            Jet bracket = -a2.derivative(l);
            const Jet dyl = a2.derivative(n + l);
            for (int k = 0; k < n; ++k) bracket += cy[k] * dyl.derivative(k);
            acc.add_product(ainv[n * i + l], bracket);
        }
        G.push_back(0.25 * acc);
    }
    return G;
}

std::vector<double> riemann_alpha(const MetricField& g, const Point& x, const Point& y) {
    const int n = g.dim;
    const JetSpace* sp = JetSpace::make(n, n, 2, 4);
    std::vector<Jet> cy;
    cy.reserve(n);
    for (int i = 0; i < n; ++i) cy.push_back(Jet::coordinate(sp, n + i, y[i]));
    const std::vector<Jet> R = spray_curvature(alpha_spray_jets(g, sp, x, y), cy);
    std::vector<double> out(n * n);
    for (int i = 0; i < n * n; ++i) out[i] = R[i].value();
    return out;
}

SpaceFormReport check_space_form(const MetricField& g, double mu,
                                 const std::vector<Point>& xs,
                                 const std::vector<Point>& ys) {
    const int n = g.dim;
    SpaceFormReport rep;
    double fit_min = 0, fit_max = 0, fit_sum = 0;
    for (std::size_t si = 0; si < xs.size(); ++si) {
        const Point& x = xs[si];
        const Point& y = ys[si];
        const std::vector<double> R = riemann_alpha(g, x, y);

        const JetSpace* sp0 = JetSpace::make(n, 0, 0, 0);
        const std::vector<Jet> aj = g.eval(coordinate_jets(sp0, x));
        std::vector<double> ylow(n, 0.0);
        double a2 = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                ylow[i] += aj[n * i + j].value() * y[j];
                a2 += aj[n * i + j].value() * y[i] * y[j];
            }

        double rm = 0, mm = 0, rr_max = 0;
        std::vector<double> M(n * n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                M[n * i + k] = a2 * (i == k ? 1.0 : 0.0) - y[i] * ylow[k];
                rm += R[n * i + k] * M[n * i + k];
                mm += M[n * i + k] * M[n * i + k];
            }
        const double fit = mm > 0 ? rm / mm : 0.0;
        for (int i = 0; i < n * n; ++i)
            rr_max = std::max(rr_max, std::abs(R[i] - mu * M[i]));
        rep.max_residual = std::max(rep.max_residual, rr_max / (1.0 + std::abs(mu) * a2));

        fit_sum += fit;
        if (si == 0) { fit_min = fit_max = fit; }
        fit_min = std::min(fit_min, fit);
        fit_max = std::max(fit_max, fit);
    }
    if (!xs.empty()) {
        rep.mu_fit_mean = fit_sum / static_cast<double>(xs.size());
        rep.mu_fit_spread = fit_max - fit_min;
    }
    return rep;
}

} // namespace finsler
