#include "finsler/gallery.hpp"

#include <cmath>
#include <string>

#include "finsler/linalg.hpp"
#include "finsler/riemannian.hpp"

namespace finsler {

namespace {

Point padded(const Point& a, int n) {
    Point r(n, 0.0);
    for (std::size_t i = 0; i < a.size() && i < static_cast<std::size_t>(n); ++i) r[i] = a[i];
    return r;
}

// 1 + mu |x|^2 as a jet, guarded: off the chart the metric is meaningless.
Jet chart_factor(double mu, const std::vector<Jet>& cx) {
    Jet q = Jet::constant(cx[0].space_ptr(), 1.0);
    for (const Jet& xi : cx) q.add_product(xi * mu, xi);
    if (q.value() <= 0)
        throw DomainError("chart factor 1 + mu|x|^2 = " + std::to_string(q.value()) +
                          " not positive");
    return q;
}

std::vector<Jet> value_jets(int n, const Point& x) {
    return coordinate_jets(JetSpace::make(n, 0, 0, 0), x);
}

} // namespace

double chart_radius(double mu) {
    const double am = std::abs(mu);
    return am <= 1.0 ? 0.5 : 0.5 / std::sqrt(am);
}

Point random_chart_point(int n, double mu, Rng& rng) {
    const double R = chart_radius(mu);
    Point x(n);
    for (;;) {
        double r2 = 0;
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(-R, R);
            r2 += x[i] * x[i];
        }
        if (r2 <= R * R) return x;
    }
}

MetricField space_form_metric(double mu, int n) {
    MetricField h;
    h.dim = n;
    h.eval = [mu, n](const std::vector<Jet>& cx) {
        const Jet q = chart_factor(mu, cx);
        const Jet w = inverse(q * q);
        std::vector<Jet> hm(static_cast<std::size_t>(n) * n,
                            Jet::constant(cx[0].space_ptr(), 0.0));
        for (int i = 0; i < n; ++i) {
            hm[n * i + i] = q * w;
            for (int j = 0; j < n; ++j) hm[n * i + j] -= mu * cx[i] * cx[j] * w;
        }
        return hm;
    };
    return h;
}

double h_mu(double mu, const Point& x, const Point& y) {
    if (x.size() != y.size()) throw ConfigError("h_mu: dimension mismatch");
    double x2 = 0, y2 = 0, xy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x2 += x[i] * x[i];
        y2 += y[i] * y[i];
        xy += x[i] * y[i];
    }
    const double q = 1.0 + mu * x2;
    if (q <= 0)
        throw DomainError("h_mu: chart factor 1 + mu|x|^2 = " + std::to_string(q) +
                          " not positive");
    return std::sqrt(q * y2 - mu * xy * xy) / q;
}

ScalarField conformal_scalar(const NavigationData& nd) {
    ScalarField c;
    c.dim = nd.n;
    const Point a = padded(nd.a, nd.n);
    const double mu = nd.mu, k = nd.k;
    c.eval = [mu, k, a](const std::vector<Jet>& cx) {
        const Jet q = chart_factor(mu, cx);
        Jet ax = Jet::constant(cx[0].space_ptr(), -k);
        for (std::size_t i = 0; i < a.size(); ++i) ax += mu * a[i] * cx[i];
        return 0.5 * ax * inverse(sqrt(q));
    };
    return c;
}

OneFormField conformal_form(const NavigationData& nd) {
    OneFormField p;
    p.dim = nd.n;
    const Point a = padded(nd.a, nd.n);
    const double mu = nd.mu, k = nd.k;
    const int n = nd.n;
    p.eval = [mu, k, a, n](const std::vector<Jet>& cx) {
        const Jet q = chart_factor(mu, cx);
        Jet kax = Jet::constant(cx[0].space_ptr(), k);
        for (int i = 0; i < n; ++i) kax -= mu * a[i] * cx[i];
        const Jet w = inverse(sqrt(q) * q); // q^{-3/2}
        std::vector<Jet> pv;
        pv.reserve(n);
        for (int i = 0; i < n; ++i) pv.push_back((kax * cx[i] + q * a[i]) * w);
        return pv;
    };
    return p;
}

double conformal_p2_closed(const NavigationData& nd, const Point& x) {
    const Point a = padded(nd.a, nd.n);
    double x2 = 0, ax = 0, a2 = 0;
    for (int i = 0; i < nd.n; ++i) {
        x2 += x[i] * x[i];
        ax += a[i] * x[i];
        a2 += a[i] * a[i];
    }
    const double q = 1.0 + nd.mu * x2;
    if (q <= 0) throw DomainError("conformal_p2_closed: off the chart");
    return a2 + (nd.k * nd.k * x2 + 2.0 * nd.k * ax - nd.mu * ax * ax) / q;
}

DeltaReport conformal_delta(const NavigationData& nd, Rng& rng, int points) {
    if (points < 2) throw ConfigError("conformal_delta: need at least 2 points");
    const int n = nd.n;
    const ScalarField c = conformal_scalar(nd);
    const MetricField h = space_form_metric(nd.mu, n);
    std::vector<double> ds;
    ds.reserve(points);
    for (int kpt = 0; kpt < points; ++kpt) {
        const Point x = random_chart_point(n, nd.mu, rng);
        const std::vector<Jet> cx = value_jets(n, x);
        const std::vector<Jet> ci = grad_jets(c, cx);
        std::vector<double> hv(static_cast<std::size_t>(n) * n);
        {
            const std::vector<Jet> hj = h.eval(cx);
            for (std::size_t i = 0; i < hv.size(); ++i) hv[i] = hj[i].value();
        }
        const std::vector<double> hinv = adjugate_inverse(hv, n);
        double g2 = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g2 += hinv[n * i + j] * ci[i].value() * ci[j].value();
        const double cv = c.eval(cx).value();
        const double d2 = g2 + nd.mu * cv * cv;
        if (d2 < 0)
            throw DomainError("conformal_delta: |grad c|^2 + mu c^2 negative at a sample");
        ds.push_back(std::sqrt(d2));
    }
    DeltaReport rep;
    double mean = 0;
    for (double d : ds) mean += d;
    mean /= points;
    rep.delta = mean;
    const double scale = std::max(std::abs(mean), 1e-12);
    for (double d : ds) rep.max_rel_dev = std::max(rep.max_rel_dev, std::abs(d - mean) / scale);
    if (rep.max_rel_dev > 1e-6)
        throw ConstancyError("conformal_delta: delta varies by " +
                             std::to_string(rep.max_rel_dev) + " relative across the chart");
    return rep;
}

namespace {

// u, v, w jets along the branch at t(x); shared by the tau/lambda closures.
struct BranchJets {
    Jet u, v, w;
};

BranchJets branch_jets(const TripleSource& T, const Jet& t) {
    const DeformationTriple T0 = T.at(t.value());
    const TripleSeries S =
        triple_series(T.params(), T0, t.valid_x() + t.valid_y() + 1);
    return {t.compose(S.u), t.compose(S.v), t.compose(S.w)};
}

} // namespace

FamilyBuild family_from_navigation(const NavigationData& nd, const ABParams& p,
                                   const TripleSource& T, bool k1_weight) {
    if (nd.mu <= 0) throw ConfigError("family_from_navigation: needs mu > 0");
    p.validate();
    const int n = nd.n;
    const double mu = nd.mu;
    const MetricField h = space_form_metric(mu, n);
    const ScalarField c = conformal_scalar(nd);
    OneFormField rho;
    rho.dim = n;
    rho.eval = [c, mu](const std::vector<Jet>& cx) {
        std::vector<Jet> g = grad_jets(c, cx);
        for (Jet& gi : g) gi *= 2.0 / mu;
        return g;
    };

    const InvertedData inv = invert_deform(h, rho, T, Point(n, 0.0));
    FamilyBuild out;
    out.mu = mu;
    out.metric.dim = n;
    out.metric.a = inv.a_field;
    out.metric.b = inv.b_field;
    out.metric.phi = solve_phi(p);
    out.b2 = inv.b2_field;

    const ScalarField b2f = inv.b2_field;
    ScalarField tau;
    tau.dim = n;
    tau.eval = [b2f, c, T](const std::vector<Jet>& cx) {
        const BranchJets B = branch_jets(T, b2f.eval(cx));
        return -2.0 * B.u * c.eval(cx) * inverse(B.w);
    };
    out.tau = tau;

    ScalarField lambda;
    lambda.dim = n;
    const double kb = k1_weight ? p.k1 : p.k2;
    const double k1 = p.k1;
    lambda.eval = [b2f, tau, T, mu, kb, k1](const std::vector<Jet>& cx) {
        const Jet t = b2f.eval(cx);
        const BranchJets B = branch_jets(T, t);
        const Jet tj = tau.eval(cx);
        return mu * B.u - (k1 * B.u * (2.0 + kb * t) - B.v) * inverse(B.u) * tj * tj;
    };
    out.lambda = lambda;
    return out;
}

QuadraticBuild quadratic_from_navigation(const NavigationData& nd, double a1, double eps,
                                         Rng& rng, bool k1_weight) {
    if (nd.mu <= 0) throw ConfigError("quadratic_from_navigation: needs mu > 0");
    if (eps != 1.0 && eps != -1.0)
        throw ConfigError("quadratic_from_navigation: eps must be +1 or -1");
    const int n = nd.n;
    const double mu = nd.mu;
    const DeltaReport dr = conformal_delta(nd, rng);
    const double d2 = dr.delta * dr.delta;
    const ScalarField c = conformal_scalar(nd);

    ScalarField omega;
    omega.dim = n;
    omega.eval = [c, mu, d2, eps](const std::vector<Jet>& cx) {
        const Jet cj = c.eval(cx);
        const Jet o = (mu / 4.0 + eps * d2 / mu) - eps * (cj * cj);
        if (o.value() <= 0)
            throw DomainError("regularity window violated: mu/4 + eps delta^2/mu - eps c^2 = " +
                              std::to_string(o.value()));
        return o;
    };

    const MetricField h = space_form_metric(mu, n);
    QuadraticBuild out;
    out.delta = dr.delta;
    out.mu = mu;
    out.a1 = a1;
    out.eps = eps;
    out.metric.dim = n;
    out.metric.phi = PhiSolution::closed_quadratic(a1, eps);

    const double ascale = 16.0 / (mu * mu);
    out.metric.a.dim = n;
    out.metric.a.eval = [h, omega, ascale, n](const std::vector<Jet>& cx) {
        const Jet f = ascale * pow_int(omega.eval(cx), 2);
        std::vector<Jet> av = h.eval(cx);
        for (Jet& e : av) e = f * e;
        return av;
    };
    const double bscale = 4.0 / (mu * std::sqrt(mu));
    out.metric.b.dim = n;
    out.metric.b.eval = [c, omega, bscale](const std::vector<Jet>& cx) {
        const Jet so = sqrt(omega.eval(cx)) * bscale;
        std::vector<Jet> bv = grad_jets(c, cx);
        for (Jet& e : bv) e = so * e;
        return bv;
    };

    ScalarField b2;
    b2.dim = n;
    b2.eval = [c, mu, d2, eps](const std::vector<Jet>& cx) {
        const Jet cj = c.eval(cx);
        const Jet p2 = (4.0 / (mu * mu)) * (d2 - mu * (cj * cj));
        return p2 * inverse(1.0 + eps * p2);
    };
    out.b2 = b2;

    ScalarField tau;
    tau.dim = n;
    tau.eval = [c, b2, eps](const std::vector<Jet>& cx) {
        const Jet m = 1.0 - eps * b2.eval(cx);
        return -2.0 * m * sqrt(m) * c.eval(cx);
    };
    out.tau = tau;

    // v = 0 branch: lambda = mu u - k1 (2 + kb t) tau^2 with u = (1 - eps t)^2
    const double k1 = 2.0 * eps;
    const double kb = k1_weight ? k1 : 0.0;
    ScalarField lambda;
    lambda.dim = n;
    lambda.eval = [b2, tau, mu, eps, k1, kb](const std::vector<Jet>& cx) {
        const Jet t = b2.eval(cx);
        const Jet m = 1.0 - eps * t;
        const Jet tj = tau.eval(cx);
        return mu * (m * m) - k1 * (2.0 + kb * t) * (tj * tj);
    };
    out.lambda = lambda;
    return out;
}

ClosedK closed_flag_curvature(double mu, double delta, double c, double s, double a1,
                              double eps) {
    const double om = mu / 4.0 + eps * delta * delta / mu - eps * c * c;
    const double ph = 1.0 + a1 * s + eps * s * s;
    if (std::abs(mu) < kSingularEps || std::abs(om) < kSingularEps ||
        std::abs(ph) < kSingularEps)
        throw SingularError("closed_flag_curvature: vanishing denominator");
    const double m1 = 1.0 - eps * s * s;
    const double num =
        6.0 * mu * (a1 * a1 - 4.0 * eps) * m1 * m1 * c * c +
        (mu * mu + 4.0 * eps * delta * delta) *
            (a1 * eps * s * s * s + 6.0 * eps * s * s + 3.0 * a1 * s + 2.0) * ph;
    const double den = 128.0 / (mu * mu) * om * om * om * ph * ph * ph * ph;
    ClosedK out;
    out.K = num / den;
    return out;
}

ClosedK closed_flag_curvature_square(double mu, double delta, double c, double s) {
    const double d2 = delta * delta;
    const double base = (1.0 + s) * (d2 / mu + mu / 4.0 - c * c);
    if (std::abs(mu) < kSingularEps || std::abs(base) < kSingularEps)
        throw SingularError("closed_flag_curvature_square: vanishing denominator");
    ClosedK out;
    out.K = (d2 / mu + mu / 4.0) * mu * mu * mu / (16.0 * base * base * base);
    const double rt = std::sqrt(4.0 * d2 + mu * mu);
    out.lower = std::pow(rt - 2.0 * delta, 3) / (mu * rt);
    out.upper = std::pow(rt + 2.0 * delta, 3) / (mu * rt);
    out.has_bounds = true;
    return out;
}

SeedPair projective_disk_seeds(int n) {
    SeedPair s;
    s.a.dim = n;
    s.a.eval = [n](const std::vector<Jet>& cx) {
        const Jet q = chart_factor(-1.0, cx); // 1 - |x|^2
        const Jet w = inverse(pow_int(q, 4));
        std::vector<Jet> av(static_cast<std::size_t>(n) * n,
                            Jet::constant(cx[0].space_ptr(), 0.0));
        for (int i = 0; i < n; ++i) {
            av[n * i + i] = q * w;
            for (int j = 0; j < n; ++j) av[n * i + j] += cx[i] * cx[j] * w;
        }
        return av;
    };
    s.b.dim = n;
    s.b.eval = [n](const std::vector<Jet>& cx) {
        const Jet q = chart_factor(-1.0, cx);
        const Jet w = inverse(q * q);
        std::vector<Jet> bv;
        bv.reserve(n);
        for (int i = 0; i < n; ++i) bv.push_back(cx[i] * w);
        return bv;
    };
    return s;
}

ABMetric zero_curvature_metric(double k1, double a1, const SeedPair& seeds) {
    if (std::abs(a1) < kSingularEps)
        throw ConfigError("zero_curvature_metric: needs a1 != 0");
    const ZeroCurvatureConstants C = zero_curvature_constants(k1, a1);
    const double ratio = C.k / (C.eps * C.eps);
    const double einv = 1.0 / C.eps;
    const int n = seeds.a.dim;
    ABMetric m;
    m.dim = n;
    m.phi = PhiSolution::closed_zero_curvature(k1, a1);
    const MetricField base_a = seeds.a;
    const OneFormField base_b = seeds.b;
    m.a.dim = n;
    m.a.eval = [base_a, base_b, ratio, n](const std::vector<Jet>& cx) {
        std::vector<Jet> av = base_a.eval(cx);
        if (ratio != 0.0) {
            const std::vector<Jet> bv = base_b.eval(cx);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) av[n * i + j] -= ratio * bv[i] * bv[j];
        }
        return av;
    };
    m.b.dim = n;
    m.b.eval = [base_b, einv](const std::vector<Jet>& cx) {
        std::vector<Jet> bv = base_b.eval(cx);
        for (Jet& e : bv) e *= einv;
        return bv;
    };
    return m;
}

} // namespace finsler
