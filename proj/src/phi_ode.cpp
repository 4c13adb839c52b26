#include "finsler/phi_ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finsler/jet.hpp"
#include "finsler/ode.hpp"

namespace finsler {

double quartic_at(const ABParams& p, double s) {
    const double s2 = s * s;
    return 1.0 + (p.k1 + p.k3) * s2 + p.k2 * s2 * s2;
}

double first_quartic_root(const ABParams& p) {
    const double inf = std::numeric_limits<double>::infinity();
    const double b = p.k1 + p.k3;
    if (std::abs(p.k2) < 1e-14) {
        if (b >= 0) return inf;
        return std::sqrt(-1.0 / b);
    }
    const double disc = b * b - 4.0 * p.k2;
    if (disc < 0) return inf;
    const double r = std::sqrt(disc);
    double best = inf;
    for (double z : {(-b - r) / (2 * p.k2), (-b + r) / (2 * p.k2)})
        if (z > 0) best = std::min(best, std::sqrt(z));
    return best;
}

ZeroCurvatureConstants zero_curvature_constants(double k1, double a1) {
    ZeroCurvatureConstants c;
    const double a2 = a1 * a1;
    c.k2 = (3.0 / 8.0) * a2 * a2 - (5.0 / 4.0) * k1 * a2 + k1 * k1;
    c.k3 = k1 - (5.0 / 4.0) * a2;
    c.k = k1 - a2 / 2.0;
    c.eps = a1 / 2.0;
    return c;
}

std::vector<double> phi_series_from_ode(const ABParams& p, double s0, double phi0,
                                        double dphi0, int count) {
    const double s2 = s0 * s0;
    const double A0 = quartic_at(p, s0);
    if (std::abs(A0) < 1e-12)
        throw DomainError("phi series: expansion point sits on a quartic root");
    // A(s0+u), B(s0+u) expanded in u
    const double kk = p.k1 + p.k3;
    const double A[5] = {A0, 2 * kk * s0 + 4 * p.k2 * s0 * s2, kk + 6 * p.k2 * s2,
                         4 * p.k2 * s0, p.k2};
    const double B[3] = {p.k1 + p.k2 * s2, 2 * p.k2 * s0, p.k2};

    std::vector<double> c(count, 0.0);
    if (count > 0) c[0] = phi0;
    if (count > 1) c[1] = dphi0;
    auto rhs_term = [&](int m) { // coefficient of u^m in phi - (s0+u) phi'
        double v = (1.0 - m) * c[m];
        if (m + 1 < count) v -= s0 * (m + 1) * c[m + 1];
        return v;
    };
    for (int m = 0; m + 2 < count; ++m) {
        double rhs = 0;
        for (int j = 0; j <= std::min(2, m); ++j) rhs += B[j] * rhs_term(m - j);
        double lhs = 0;
        for (int j = 1; j <= std::min(4, m); ++j)
            lhs += A[j] * (m - j + 2) * (m - j + 1) * c[m - j + 2];
        c[m + 2] = (rhs - lhs) / (A0 * (m + 2) * (m + 1));
    }
    return c;
}

namespace {

// Closed shapes, templated so one-variable jets supply the derivatives.
template <class T>
T shape_square(const T& s) {
    return (1.0 + s) * (1.0 + s);
}

template <class T>
T shape_quadratic(double a1, double eps, const T& s) {
    return 1.0 + a1 * s + eps * (s * s);
}

template <class T, class Sqrt>
T shape_zero_curvature(double k, double eps, const T& s, Sqrt sq) {
    T r = sq(1.0 + k * (s * s));
    T t = r + eps * s;
    return t * t / r;
}

std::array<double, 3> eval_by_jet(PhiKind kind, double k, double eps, double a1, double s) {
    const JetSpace* sp = JetSpace::make(1, 0, 2, 0);
    Jet js = Jet::coordinate(sp, 0, s);
    Jet f;
    switch (kind) {
        case PhiKind::closed_square: f = shape_square(js); break;
        case PhiKind::closed_quadratic: f = shape_quadratic(a1, eps, js); break;
        case PhiKind::closed_zero_curvature:
            f = shape_zero_curvature(k, eps, js, [](const Jet& v) { return finsler::sqrt(v); });
            break;
        default: return {1.0, 0.0, 0.0}; // riemannian
    }
    return {f.partial({0}), f.partial({1}), f.partial({2})};
}

// Largest s <= cap (scanning both signs) where the closed formula stays
// meaningful: quartic positive, phi positive, zero-curvature root argument positive.
double closed_radius(const ABParams& p, PhiKind kind, double k, double eps, double a1,
                     double cap) {
    const double step = 1e-3;
    for (double s = step; s <= cap + 0.5 * step; s += step) {
        for (double sg : {s, -s}) {
            if (quartic_at(p, sg) <= 1e-12) return s - step;
            if (kind == PhiKind::closed_zero_curvature && 1.0 + k * sg * sg <= 1e-12) return s - step;
            if (eval_by_jet(kind, k, eps, a1, sg)[0] <= 1e-12) return s - step;
        }
    }
    return cap;
}

} // namespace

PhiSolution PhiSolution::closed_square() {
    PhiSolution s;
    s.kind_ = PhiKind::closed_square;
    s.params_ = {2.0, 0.0, -3.0, 2.0};
    s.b0_ = closed_radius(s.params_, s.kind_, 0, 0, 2.0, 1.0);
    return s;
}

PhiSolution PhiSolution::closed_quadratic(double a1, double eps) {
    PhiSolution s;
    s.kind_ = PhiKind::closed_quadratic;
    s.params_ = {2.0 * eps, 0.0, -3.0 * eps, a1};
    s.eps_ = eps;
    s.b0_ = closed_radius(s.params_, s.kind_, 0, eps, a1, 1.0);
    return s;
}

PhiSolution PhiSolution::closed_zero_curvature(double k1, double a1) {
    PhiSolution s;
    const ZeroCurvatureConstants c = zero_curvature_constants(k1, a1);
    s.kind_ = PhiKind::closed_zero_curvature;
    s.params_ = {k1, c.k2, c.k3, a1};
    s.k_ = c.k;
    s.eps_ = c.eps;
    s.b0_ = closed_radius(s.params_, s.kind_, c.k, c.eps, a1, 1.0);
    return s;
}

PhiSolution PhiSolution::riemannian() {
    PhiSolution s;
    s.kind_ = PhiKind::riemannian;
    s.params_ = {0.0, 0.0, 0.0, 0.0};
    s.b0_ = 1.0;
    return s;
}

std::array<double, 3> PhiSolution::eval(double s) const {
    if (std::abs(s) > b0_ + 1e-15)
        throw DomainError("phi: |s| beyond validity radius " + std::to_string(b0_));
    if (kind_ != PhiKind::numeric) return eval_by_jet(kind_, k_, eps_, params_.a1, s);

    // nearest accepted node, then a local Taylor step
    const auto it = std::lower_bound(node_s_.begin(), node_s_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - node_s_.begin());
    if (i == node_s_.size() || (i > 0 && s - node_s_[i - 1] < node_s_[i] - s)) --i;
    const double s0 = node_s_[i];
    const auto c = phi_series_from_ode(params_, s0, node_v_[i][0], node_v_[i][1], 16);
    const double u = s - s0;
    double f = 0, df = 0, d2f = 0;
    for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) {
        if (m >= 2) d2f = d2f * u + c[m] * m * (m - 1);
        if (m >= 1) df = df * u + c[m] * m;
        f = f * u + c[m];
    }
    return {f, df, d2f};
}

std::vector<double> PhiSolution::series_at(double s0, int count) const {
    const auto v = eval(s0);
    return phi_series_from_ode(params_, s0, v[0], v[1], count);
}

double PhiSolution::ode_residual(double s) const {
    const auto v = eval(s);
    return quartic_at(params_, s) * v[2] -
           (params_.k1 + params_.k2 * s * s) * (v[0] - s * v[1]);
}

std::string PhiSolution::kind_name() const {
    switch (kind_) {
        case PhiKind::closed_square: return "closed_square";
        case PhiKind::closed_quadratic: return "closed_quadratic";
        case PhiKind::closed_zero_curvature: return "closed_zero_curvature";
        case PhiKind::numeric: return "numeric";
        case PhiKind::riemannian: return "riemannian";
    }
    return "?";
}

PhiSolution solve_phi(const ABParams& p) {
    p.validate();
    PhiSolution out;
    out.kind_ = PhiKind::numeric;
    out.params_ = p;
    out.b0_ = std::min(0.9 * first_quartic_root(p), 1.0);

    Dopri5 ode(
        [&p](double s, const std::vector<double>& y, std::vector<double>& dy) {
            dy[0] = y[1];
            dy[1] = (p.k1 + p.k2 * s * s) * (y[0] - s * y[1]) / quartic_at(p, s);
        },
        1e-12, 1e-14, 0.02);

    const OdeSolution right = ode.integrate(0.0, out.b0_, {1.0, p.a1});
    const OdeSolution left = ode.integrate(0.0, -out.b0_, {1.0, p.a1});
    for (std::size_t k = left.t.size(); k-- > 1;) {
        out.node_s_.push_back(left.t[k]);
        out.node_v_.push_back({left.y[k][0], left.y[k][1]});
    }
    for (std::size_t k = 0; k < right.t.size(); ++k) {
        out.node_s_.push_back(right.t[k]);
        out.node_v_.push_back({right.y[k][0], right.y[k][1]});
    }
    return out;
}

RegularityReport regularity_check(const PhiSolution& phi, double b, int grid) {
    if (b < 0 || b > phi.domain())
        throw DomainError("regularity_check: b outside the phi validity radius");
    RegularityReport rep{true, std::numeric_limits<double>::infinity(), 0.0, ""};
    const ABParams& p = phi.params();
    auto consider = [&rep](double margin, double s, const char* cond) {
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.argmin_s = s;
            rep.failed_condition = cond;
        }
    };
    consider(1.0 + p.k1 * b * b, b, "1 + k1 b^2 > 0");
    consider(quartic_at(p, b), b, "quartic positive at b");
    for (int i = 0; i < grid; ++i) {
        const double s = -b + 2.0 * b * i / (grid - 1);
        const auto v = phi.eval(s);
        consider(v[0], s, "phi > 0");
        consider(v[0] - s * v[1], s, "phi - s phi' > 0");
        consider(v[0] - s * v[1] + (b * b - s * s) * v[2], s,
                 "phi - s phi' + (b^2 - s^2) phi'' > 0");
    }
    rep.ok = rep.min_margin > 0;
    if (rep.ok) rep.failed_condition.clear();
    return rep;
}

} // namespace finsler
