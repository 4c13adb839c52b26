#ifndef FINSLER_TEST_FIXTURES_HPP
#define FINSLER_TEST_FIXTURES_HPP

#include <vector>

#include "finsler/fields.hpp"
#include "finsler/jet.hpp"

namespace finsler::testfix {

// Constant-curvature model metric on a ball:
//   h_ij = [(1 + mu |x|^2) d_ij - mu x_i x_j] / (1 + mu |x|^2)^2.
inline MetricField ball_space_form(int n, double mu) {
    MetricField g;
    g.dim = n;
    g.eval = [n, mu](const std::vector<Jet>& x) {
        Jet u = Jet::constant(x[0].space_ptr(), 1.0);
        for (int i = 0; i < n; ++i) u.add_product(mu * x[i], x[i]);
        const Jet w = inverse(u * u);
        std::vector<Jet> h(static_cast<std::size_t>(n) * n, Jet::constant(x[0].space_ptr(), 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet e = (i == j) ? u : Jet::constant(x[0].space_ptr(), 0.0);
                e -= mu * (x[i] * x[j]);
                h[n * i + j] = e * w;
            }
        return h;
    };
    return g;
}

// b_i = (c + q |x|^2) x_i, a smooth radial form with nonzero nabla.
inline OneFormField radial_form(int n, double c, double q) {
    OneFormField f;
    f.dim = n;
    f.eval = [n, c, q](const std::vector<Jet>& x) {
        Jet r2 = Jet::constant(x[0].space_ptr(), 0.0);
        for (int i = 0; i < n; ++i) r2.add_product(x[i], x[i]);
        const Jet w = c + q * r2;
        std::vector<Jet> b;
        b.reserve(n);
        for (int i = 0; i < n; ++i) b.push_back(w * x[i]);
        return b;
    };
    return f;
}

// Symmetric polynomial perturbation of the flat metric; positive definite
// near the origin, not a space form.
inline MetricField lumpy_metric(int n) {
    MetricField g;
    g.dim = n;
    g.eval = [n](const std::vector<Jet>& x) {
        std::vector<Jet> a(static_cast<std::size_t>(n) * n, Jet::constant(x[0].space_ptr(), 0.0));
        for (int i = 0; i < n; ++i) {
            a[n * i + i] = Jet::constant(x[0].space_ptr(), 1.0);
            a[n * i + i] += 0.3 * (x[(i + 1) % n] * x[(i + 1) % n]);
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                a[n * i + j] = 0.1 * (x[i] * x[j]) + 0.05 * x[(j + i) % n];
                a[n * j + i] = a[n * i + j];
            }
        return a;
    };
    return g;
}

inline double field_entry(const MetricField& g, const Point& x, int i, int j) {
    const JetSpace* sp = JetSpace::make(g.dim, 0, 0, 0);
    return g.eval(coordinate_jets(sp, x))[g.dim * i + j].value();
}

inline double form_entry(const OneFormField& b, const Point& x, int i) {
    const JetSpace* sp = JetSpace::make(b.dim, 0, 0, 0);
    return b.eval(coordinate_jets(sp, x))[i].value();
}

} // namespace finsler::testfix

#endif
