#include "finsler/deform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "finsler/linalg.hpp"
#include "finsler/ode.hpp"
#include "finsler/riemannian.hpp"

namespace finsler {

namespace {

double f_at(double t, const ABParams& p) { return 1.0 + (p.k1 + p.k3) * t + p.k2 * t * t; }
double df_at(double t, const ABParams& p) { return (p.k1 + p.k3) + 2.0 * p.k2 * t; }

// f(t) = A(sqrt t), so the first admissibility failure in t is the square of
// the first quartic root in s.
double first_f_root(const ABParams& p) {
    const double s = first_quartic_root(p);
    return s * s;
}

void require_admissible(double t, const ABParams& p, const char* who) {
    if (t < 0)
        throw DomainError(std::string(who) + ": negative deformation parameter t = " +
                          std::to_string(t));
    if (t >= first_f_root(p) - kSingularEps)
        throw DomainError(std::string(who) + ": t = " + std::to_string(t) +
                          " at or beyond the admissibility root");
}

double horner(std::span<const double> c, double d) {
    double s = 0;
    for (std::size_t k = c.size(); k-- > 0;) s = s * d + c[k];
    return s;
}

double horner_derivative(std::span<const double> c, double d) {
    double s = 0;
    for (std::size_t k = c.size(); k-- > 1;) s = s * d + static_cast<double>(k) * c[k];
    return s;
}

} // namespace

double sigma_by_quadrature(double t, const ABParams& p) {
    require_admissible(t, p, "sigma_by_quadrature");
    if (t == 0) return 0;
    Dopri5 solver([p](double r, const std::vector<double>&, std::vector<double>& dy) {
        dy[0] = (p.k2 * r + p.k3) / (2.0 * f_at(r, p));
    });
    return solver.integrate(0.0, t, {0.0}).y.back()[0];
}

double sigma_of(double t, const ABParams& p) {
    require_admissible(t, p, "sigma_of");
    if (std::abs(p.k2) < kSingularEps) {
        const double m = p.k1 + p.k3;
        if (std::abs(m) < kSingularEps) return 0.5 * p.k3 * t;
        return p.k3 / (2.0 * m) * std::log1p(m * t);
    }
    return sigma_by_quadrature(t, p);
}

namespace {

DeformationTriple triple_from_sigma(double t, double sigma, const ABParams& p) {
    const double f = f_at(t, p);
    DeformationTriple T;
    T.t = t;
    T.sigma = sigma;
    const double e2s = std::exp(2.0 * sigma);
    const double dsigma = (p.k2 * t + p.k3) / (2.0 * f);
    T.u = e2s;
    T.v = (p.k1 + p.k3 + p.k2 * t) * e2s;
    T.w = std::sqrt(f) * std::exp(sigma);
    T.du = 2.0 * dsigma * T.u;
    T.dv = p.k2 * T.u + (p.k1 + p.k3 + p.k2 * t) * T.du;
    T.dw = T.w * (df_at(t, p) / (2.0 * f) + dsigma);
    return T;
}

} // namespace

DeformationTriple triple_explicit(double t, const ABParams& p) {
    require_admissible(t, p, "triple_explicit");
    return triple_from_sigma(t, sigma_of(t, p), p);
}

DeformationTriple triple_quadratic(double t, double eps) {
    if (eps != 1.0 && eps != -1.0)
        throw ConfigError("triple_quadratic: eps must be +1 or -1");
    const double m = 1.0 - eps * t;
    if (t < 0 || m <= kSingularEps)
        throw DomainError("triple_quadratic: t outside the admissible range");
    DeformationTriple T;
    T.t = t;
    T.u = m * m;
    T.v = 0.0;
    T.w = std::sqrt(m);
    T.du = -2.0 * eps * m;
    T.dv = 0.0;
    T.dw = -0.5 * eps / T.w;
    T.sigma = std::log(m);
    return T;
}

std::array<double, 3> triple_ode_residual(const DeformationTriple& T, const ABParams& p) {
    const double f = f_at(T.t, p);
    if (std::abs(f) < kSingularEps)
        throw DomainError("triple_ode_residual: admissibility root");
    if (std::abs(T.u) < kSingularEps)
        throw SingularError("triple_ode_residual: u vanishes");
    const double r1 = T.du - (T.v - p.k1 * T.u) / f;
    const double r2 =
        T.dv -
        (T.u * (p.k2 * T.u - p.k3 * T.v - 2.0 * p.k1 * T.v) + 2.0 * T.v * T.v) / (T.u * f);
    const double r3 = T.dw - T.w * (3.0 * T.v - p.k3 * T.u - 2.0 * p.k1 * T.u) / (2.0 * T.u * f);
    return {std::abs(r1), std::abs(r2), std::abs(r3)};
}

TripleSeries triple_series(const ABParams& p, const DeformationTriple& T0, int count) {
    if (count < 1) throw ConfigError("triple_series: count must be positive");
    const double fc[3] = {f_at(T0.t, p), df_at(T0.t, p), p.k2};
    if (fc[0] <= kSingularEps)
        throw DomainError("triple_series: expansion at an admissibility root");
    if (std::abs(T0.u) < kSingularEps)
        throw SingularError("triple_series: u vanishes at the base point");
    TripleSeries S;
    S.u.assign(count, 0.0);
    S.v.assign(count, 0.0);
    S.w.assign(count, 0.0);
    S.u[0] = T0.u;
    S.v[0] = T0.v;
    S.w[0] = T0.w;
    const double c1 = p.k3 + 2.0 * p.k1;
    auto conv = [](const std::vector<double>& A, const std::vector<double>& B, int k) {
        double s = 0;
        for (int a = 0; a <= k; ++a) s += A[a] * B[k - a];
        return s;
    };
    for (int k = 0; k + 1 < count; ++k) {
        // u' f = v - k1 u, order k; the i = k term of (u' f) is the unknown
        double lhsu = 0;
        for (int c = 1; c <= std::min(2, k); ++c) lhsu += (k - c + 1) * S.u[k - c + 1] * fc[c];
        S.u[k + 1] = (S.v[k] - p.k1 * S.u[k] - lhsu) / ((k + 1) * fc[0]);
        // v' u f = k2 u^2 - (k3 + 2 k1) u v + 2 v^2, order k
        const double rhsv =
            p.k2 * conv(S.u, S.u, k) - c1 * conv(S.u, S.v, k) + 2.0 * conv(S.v, S.v, k);
        double lhsv = 0;
        for (int i = 0; i < k; ++i)
            for (int c = 0; c <= std::min(2, k - i); ++c)
                lhsv += (i + 1) * S.v[i + 1] * S.u[k - i - c] * fc[c];
        S.v[k + 1] = (rhsv - lhsv) / ((k + 1) * S.u[0] * fc[0]);
        // 2 w' u f = w {3 v - (k3 + 2 k1) u}, order k
        const double rhsw = 3.0 * conv(S.w, S.v, k) - c1 * conv(S.w, S.u, k);
        double lhsw = 0;
        for (int i = 0; i < k; ++i)
            for (int c = 0; c <= std::min(2, k - i); ++c)
                lhsw += 2.0 * (i + 1) * S.w[i + 1] * S.u[k - i - c] * fc[c];
        S.w[k + 1] = (rhsw - lhsw) / (2.0 * (k + 1) * S.u[0] * fc[0]);
    }
    return S;
}

TripleSource TripleSource::family(const ABParams& p) {
    p.validate();
    TripleSource T;
    T.kind_ = Kind::family;
    T.p_ = p;
    T.tmax_ = first_f_root(p);
    if (std::abs(p.k2) >= kSingularEps) {
        // no closed quadrature: integrate sigma once, at() re-expands locally
        const double cap = std::min(0.999 * T.tmax_, 8.0);
        Dopri5 solver([p](double r, const std::vector<double>&, std::vector<double>& dy) {
            dy[0] = (p.k2 * r + p.k3) / (2.0 * f_at(r, p));
        });
        OdeSolution sol = solver.integrate(0.0, cap, {0.0});
        T.node_t_ = sol.t;
        T.node_sig_.reserve(sol.t.size());
        for (const auto& y : sol.y) T.node_sig_.push_back(y[0]);
        T.tmax_ = cap;
    }
    return T;
}

TripleSource TripleSource::quadratic(const ABParams& p) {
    p.validate();
    const double eps = p.k1 / 2.0;
    if (std::abs(eps * eps - 1.0) > 1e-12 || std::abs(p.k2) > 1e-12 ||
        std::abs(p.k3 + 3.0 * eps) > 1e-12)
        throw ConfigError(
            "TripleSource::quadratic: branch needs k1 = 2e, k2 = 0, k3 = -3e with e = +-1");
    TripleSource T;
    T.kind_ = Kind::quadratic;
    T.p_ = p;
    T.eps_ = eps;
    T.tmax_ = first_f_root(p);
    return T;
}

TripleSource TripleSource::ivp(const ABParams& p, double u0, double v0, double w0) {
    p.validate();
    if (std::abs(u0) < kSingularEps || std::abs(w0) < kSingularEps)
        throw ConfigError("TripleSource::ivp: u and w must start away from zero");
    TripleSource T;
    T.kind_ = Kind::ivp;
    T.p_ = p;
    const double cap = std::min(0.9 * first_f_root(p), 8.0);
    Dopri5 solver([p](double t, const std::vector<double>& y, std::vector<double>& dy) {
        const double f = f_at(t, p);
        const double u = y[0], v = y[1], w = y[2];
        dy[0] = (v - p.k1 * u) / f;
        dy[1] = (u * (p.k2 * u - p.k3 * v - 2.0 * p.k1 * v) + 2.0 * v * v) / (u * f);
        dy[2] = w * (3.0 * v - p.k3 * u - 2.0 * p.k1 * u) / (2.0 * u * f);
    });
    OdeSolution sol = solver.integrate(0.0, cap, {u0, v0, w0});
    T.node_t_ = sol.t;
    T.node_uvw_.reserve(sol.t.size());
    for (const auto& y : sol.y) T.node_uvw_.push_back({y[0], y[1], y[2]});
    T.tmax_ = cap;
    return T;
}

namespace {

std::size_t nearest_node(const std::vector<double>& ts, double t) {
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t k = (it == ts.begin()) ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
    if (k + 1 < ts.size() && std::abs(ts[k + 1] - t) < std::abs(t - ts[k])) ++k;
    return k;
}

} // namespace

DeformationTriple TripleSource::at(double t) const {
    switch (kind_) {
        case Kind::family: {
            if (node_t_.empty()) return triple_explicit(t, p_);
            if (t < 0 || t > tmax_)
                throw DomainError("TripleSource: t outside the integrated range");
            // sigma from the node, then its Taylor tail: sigma' = g with
            // g = (k2 r + k3)/(2 f), expanded as a series about the node
            const std::size_t k = nearest_node(node_t_, t);
            const double t0 = node_t_[k];
            constexpr int L = 10;
            double num[2] = {p_.k2 * t0 + p_.k3, p_.k2};
            double den[3] = {2.0 * f_at(t0, p_), 2.0 * df_at(t0, p_), 2.0 * p_.k2};
            double g[L];
            for (int i = 0; i < L; ++i) {
                double s = i < 2 ? num[i] : 0.0;
                for (int j = std::max(0, i - 2); j < i; ++j) s -= g[j] * den[i - j];
                g[i] = s / den[0];
            }
            const double d = t - t0;
            double sigma = 0;
            for (int i = L; i-- > 0;) sigma = (sigma * d + g[i] / (i + 1));
            sigma = sigma * d + node_sig_[k];
            return triple_from_sigma(t, sigma, p_);
        }
        case Kind::quadratic:
            return triple_quadratic(t, eps_);
        case Kind::ivp:
            break;
    }
    if (t < 0 || t > tmax_)
        throw DomainError("TripleSource: t outside the integrated range");
    const std::size_t k = nearest_node(node_t_, t);
    DeformationTriple T0;
    T0.t = node_t_[k];
    T0.u = node_uvw_[k][0];
    T0.v = node_uvw_[k][1];
    T0.w = node_uvw_[k][2];
    const TripleSeries S = triple_series(p_, T0, 12);
    const double d = t - T0.t;
    DeformationTriple T;
    T.t = t;
    T.u = horner(S.u, d);
    T.v = horner(S.v, d);
    T.w = horner(S.w, d);
    T.du = horner_derivative(S.u, d);
    T.dv = horner_derivative(S.v, d);
    T.dw = horner_derivative(S.w, d);
    if (T.u <= kSingularEps)
        throw SingularError("TripleSource: u lost positivity along the branch");
    T.sigma = 0.5 * std::log(T.u);
    return T;
}

namespace {

// Everything both deformed fields need at one x: the input field jets and the
// (u, v, w) jets threaded through t(x) = a^{ij} b_i b_j.
struct ForwardCore {
    std::vector<Jet> av, bv;
    Jet t, u, v, w;
};

ForwardCore forward_core(const MetricField& a, const OneFormField& b, const TripleSource& T,
                         const std::vector<Jet>& cx) {
    const int n = a.dim;
    ForwardCore r;
    r.av = a.eval(cx);
    r.bv = b.eval(cx);
    const std::vector<Jet> ainv = adjugate_inverse(r.av, n);
    r.t = Jet::constant(cx[0].space_ptr(), 0.0);
    for (int i = 0; i < n; ++i) {
        Jet row = Jet::constant(cx[0].space_ptr(), 0.0);
        for (int j = 0; j < n; ++j) row.add_product(ainv[n * i + j], r.bv[j]);
        r.t.add_product(row, r.bv[i]);
    }
    const DeformationTriple T0 = T.at(r.t.value());
    const int count = r.t.valid_x() + r.t.valid_y() + 1;
    const TripleSeries S = triple_series(T.params(), T0, std::max(count, 2));
    r.u = r.t.compose(S.u);
    r.v = r.t.compose(S.v);
    r.w = r.t.compose(S.w);
    return r;
}

std::vector<Jet> value_jets(int n, const Point& x) {
    return coordinate_jets(JetSpace::make(n, 0, 0, 0), x);
}

} // namespace

DeformedData deform(const MetricField& a, const OneFormField& b, const TripleSource& T,
                    const Point& x, const Point& y) {
    const int n = a.dim;
    if (b.dim != n || static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
        throw ConfigError("deform: dimension mismatch");
    DeformedData out;
    out.h_field.dim = n;
    out.h_field.eval = [a, b, T, n](const std::vector<Jet>& cx) {
        const ForwardCore r = forward_core(a, b, T, cx);
        std::vector<Jet> hm(static_cast<std::size_t>(n) * n,
                            Jet::constant(cx[0].space_ptr(), 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet e = r.u * r.av[n * i + j];
                e.add_product(r.v * r.bv[i], r.bv[j]);
                hm[n * i + j] = e;
            }
        return hm;
    };
    out.rho_field.dim = n;
    out.rho_field.eval = [a, b, T, n](const std::vector<Jet>& cx) {
        const ForwardCore r = forward_core(a, b, T, cx);
        std::vector<Jet> rv;
        rv.reserve(n);
        for (int i = 0; i < n; ++i) rv.push_back(r.w * r.bv[i]);
        return rv;
    };

    const std::vector<Jet> cx = value_jets(n, x);
    const ForwardCore r = forward_core(a, b, T, cx);
    out.b2 = r.t.value();
    double h2 = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            h2 += (r.u.value() * r.av[n * i + j].value() +
                   r.v.value() * r.bv[i].value() * r.bv[j].value()) *
                  y[i] * y[j];
    if (h2 <= 0) throw DegeneracyError("deform: h^2 not positive at the sample");
    out.h = std::sqrt(h2);
    double rho = 0;
    for (int i = 0; i < n; ++i) rho += r.w.value() * r.bv[i].value() * y[i];
    out.rho = rho;
    // |rho|^2_h from the deformed fields themselves, not from the identity it
    // is supposed to satisfy
    std::vector<double> hv(static_cast<std::size_t>(n) * n);
    std::vector<double> rv(n);
    for (int i = 0; i < n; ++i) {
        rv[i] = r.w.value() * r.bv[i].value();
        for (int j = 0; j < n; ++j)
            hv[n * i + j] = r.u.value() * r.av[n * i + j].value() +
                            r.v.value() * r.bv[i].value() * r.bv[j].value();
    }
    const std::vector<double> hinv = adjugate_inverse(hv, n);
    double p2 = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) p2 += hinv[n * i + j] * rv[i] * rv[j];
    out.p2 = p2;
    return out;
}

namespace {

// |rho|^2_h as a function of t along the branch: P(t) = w^2 t/(u + v t).
double p2_of_t(const TripleSource& T, double t) {
    const DeformationTriple r = T.at(t);
    const double den = r.u + r.v * t;
    if (std::abs(den) < kSingularEps)
        throw SingularError("invert_deform: u + v t vanishes along the branch");
    return r.w * r.w * t / den;
}

double dp2_of_t(const TripleSource& T, double t) {
    const DeformationTriple r = T.at(t);
    const double den = r.u + r.v * t;
    return (2.0 * r.w * r.dw * t + r.w * r.w) / den -
           r.w * r.w * t * (r.du + r.dv * t + r.v) / (den * den);
}

double invert_p2_scalar(const TripleSource& T, double p2) {
    if (p2 <= 0) {
        if (p2 > -1e-14) return 0.0;
        throw InversionError("invert_deform: negative |rho|^2");
    }
    const double thi = 0.95 * std::min(T.t_max(), 4.0);
    const double step = 1e-3;
    const int nstep = static_cast<int>(std::ceil(thi / step));
    double tprev = 0.0, gprev = -p2; // P(0) = 0
    double lo = -1, hi = -1;
    int brackets = 0;
    std::string all;
    for (int k = 1; k <= nstep; ++k) {
        const double t = std::min(thi, k * step);
        const double g = p2_of_t(T, t) - p2;
        if (gprev <= 0 && g > 0) {
            ++brackets;
            if (brackets == 1) {
                lo = tprev;
                hi = t;
            }
            all += (all.empty() ? "" : ", ") + std::to_string(0.5 * (tprev + t));
        }
        tprev = t;
        gprev = g;
    }
    if (brackets == 0)
        throw InversionError("invert_deform: no root of P(t) = |rho|^2 in [0, " +
                             std::to_string(thi) + "]");
    if (brackets > 1)
        throw InversionError("invert_deform: P(t) = |rho|^2 has " + std::to_string(brackets) +
                             " candidate roots near t = {" + all + "}");
    for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (p2_of_t(T, mid) - p2 <= 0)
            lo = mid;
        else
            hi = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double d = dp2_of_t(T, t);
        if (std::abs(d) < kSingularEps) break;
        const double tn = t - (p2_of_t(T, t) - p2) / d;
        if (tn >= lo && tn <= hi) t = tn;
    }
    return t;
}

// P and P' as Taylor series about t0, from the branch series there.
std::vector<double> p2_series(const TripleSeries& S, double t0, int count) {
    std::vector<double> wsq(count, 0.0), num(count, 0.0), den(count, 0.0), q(count, 0.0);
    for (int k = 0; k < count; ++k)
        for (int a = 0; a <= k; ++a) wsq[k] += S.w[a] * S.w[k - a];
    for (int k = 0; k < count; ++k) {
        num[k] = wsq[k] * t0 + (k >= 1 ? wsq[k - 1] : 0.0);
        den[k] = S.u[k] + S.v[k] * t0 + (k >= 1 ? S.v[k - 1] : 0.0);
    }
    if (std::abs(den[0]) < kSingularEps)
        throw SingularError("invert_deform: u + v t vanishes along the branch");
    for (int k = 0; k < count; ++k) {
        double s = num[k];
        for (int j = 0; j < k; ++j) s -= q[j] * den[k - j];
        q[k] = s / den[0];
    }
    return q;
}

// t(x) with derivatives: Newton in jet arithmetic starting from the scalar
// root, which doubles the correct order every pass.
Jet b2_jet(const TripleSource& T, const Jet& p2, double t0) {
    Jet t = Jet::constant(p2.space_ptr(), t0);
    const int ord = p2.valid_x() + p2.valid_y();
    const int count = ord + 3;
    for (int it = 0; it < 5; ++it) {
        const DeformationTriple T0 = T.at(t.value());
        const TripleSeries S = triple_series(T.params(), T0, count);
        const std::vector<double> P = p2_series(S, t.value(), count);
        std::vector<double> dP(count - 1);
        for (int k = 1; k < count; ++k) dP[k - 1] = k * P[k];
        const Jet dPj = t.compose(dP);
        if (std::abs(dPj.value()) < kSingularEps)
            throw SingularError("invert_deform: dP/dt vanishes at the root");
        t = t - (t.compose(P) - p2) * inverse(dPj);
    }
    return t;
}

struct InverseCore {
    std::vector<Jet> hv, rv;
    Jet t;
};

InverseCore inverse_core(const MetricField& h, const OneFormField& rho, const TripleSource& T,
                         const std::vector<Jet>& cx) {
    const int n = h.dim;
    InverseCore r;
    r.hv = h.eval(cx);
    r.rv = rho.eval(cx);
    const std::vector<Jet> hinv = adjugate_inverse(r.hv, n);
    Jet p2 = Jet::constant(cx[0].space_ptr(), 0.0);
    for (int i = 0; i < n; ++i) {
        Jet row = Jet::constant(cx[0].space_ptr(), 0.0);
        for (int j = 0; j < n; ++j) row.add_product(hinv[n * i + j], r.rv[j]);
        p2.add_product(row, r.rv[i]);
    }
    const double t0 = invert_p2_scalar(T, p2.value());
    r.t = t0 == 0.0 && p2.value() <= 0.0 ? Jet::constant(cx[0].space_ptr(), 0.0)
                                         : b2_jet(T, p2, t0);
    return r;
}

} // namespace

InvertedData invert_deform(const MetricField& h, const OneFormField& rho,
                           const TripleSource& T, const Point& x) {
    const int n = h.dim;
    if (rho.dim != n || static_cast<int>(x.size()) != n)
        throw ConfigError("invert_deform: dimension mismatch");
    InvertedData out;
    // branch evaluators: each solves P(t(x)) = |rho|^2_h(x) afresh, so they
    // are honest functions of x, not frozen at the construction point
    out.b2_field.dim = n;
    out.b2_field.eval = [h, rho, T](const std::vector<Jet>& cx) {
        return inverse_core(h, rho, T, cx).t;
    };
    out.a_field.dim = n;
    out.a_field.eval = [h, rho, T, n](const std::vector<Jet>& cx) {
        const InverseCore r = inverse_core(h, rho, T, cx);
        const DeformationTriple T0 = T.at(r.t.value());
        const TripleSeries S =
            triple_series(T.params(), T0, r.t.valid_x() + r.t.valid_y() + 1);
        const Jet uin = inverse(r.t.compose(S.u));
        const Jet w = r.t.compose(S.w);
        const Jet vw2 = r.t.compose(S.v) * inverse(w * w);
        std::vector<Jet> av(static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                av[n * i + j] = (r.hv[n * i + j] - vw2 * r.rv[i] * r.rv[j]) * uin;
        return av;
    };
    out.b_field.dim = n;
    out.b_field.eval = [h, rho, T, n](const std::vector<Jet>& cx) {
        const InverseCore r = inverse_core(h, rho, T, cx);
        const DeformationTriple T0 = T.at(r.t.value());
        const TripleSeries S =
            triple_series(T.params(), T0, r.t.valid_x() + r.t.valid_y() + 1);
        const Jet win = inverse(r.t.compose(S.w));
        std::vector<Jet> bv;
        bv.reserve(n);
        for (int i = 0; i < n; ++i) bv.push_back(r.rv[i] * win);
        return bv;
    };
    out.b2 = inverse_core(h, rho, T, value_jets(n, x)).t.value();
    return out;
}

ConformalReport conformal_check(const MetricField& h, const OneFormField& rho,
                                const ScalarField& c, const std::vector<Point>& xs) {
    const int n = h.dim;
    ConformalReport rep;
    for (const Point& x : xs) {
        const BetaDerivedTensors bt = beta_tensors(h, rho, x);
        const double cv = c.eval(value_jets(n, x)).value();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                rep.max_conformal = std::max(
                    rep.max_conformal,
                    std::abs(bt.nabla[n * i + j] + 2.0 * cv * bt.a[n * i + j]));
                rep.max_antisym = std::max(rep.max_antisym, std::abs(bt.s[n * i + j]));
            }
    }
    return rep;
}

double spray_relation_check(const MetricField& a, const OneFormField& b, const TripleSource& T,
                            const ScalarField& tau, const std::vector<Point>& xs,
                            const std::vector<Point>& ys) {
    const int n = a.dim;
    if (xs.size() != ys.size() || xs.empty())
        throw ConfigError("spray_relation_check: need paired samples");
    const ABParams& p = T.params();
    const MetricField h = deform(a, b, T, xs[0], ys[0]).h_field;
    double worst = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const Point& x = xs[k];
        const Point& y = ys[k];
        const BetaDerivedTensors bt = beta_tensors(a, b, x);
        const DeformationTriple tr = T.at(bt.b2);
        const std::vector<double> Gh = alpha_spray(h, x, y);
        const std::vector<double> Ga = alpha_spray(a, x, y);
        double alpha2 = 0, beta = 0;
        for (int i = 0; i < n; ++i) {
            beta += bt.b[i] * y[i];
            for (int j = 0; j < n; ++j) alpha2 += bt.a[n * i + j] * y[i] * y[j];
        }
        const double tv = tau.eval(value_jets(n, x)).value();
        for (int i = 0; i < n; ++i) {
            const double pred =
                Ga[i] + tv * (0.5 * (p.k1 * alpha2 + p.k2 * beta * beta) * bt.bu[i] -
                              (p.k1 * tr.u - tr.v) / tr.u * beta * y[i]);
            worst = std::max(worst, std::abs(Gh[i] - pred));
        }
    }
    return worst;
}

double lambda_from_mu(const ABParams& p, const DeformationTriple& T, double tau, double mu,
                      bool k1_weight) {
    if (std::abs(T.u) < kSingularEps)
        throw SingularError("lambda_from_mu: u vanishes");
    const double kb = k1_weight ? p.k1 : p.k2;
    return mu * T.u - (p.k1 * T.u * (2.0 + kb * T.t) - T.v) / T.u * tau * tau;
}

} // namespace finsler
