#ifndef FINSLER_JET_HPP
#define FINSLER_JET_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

// Values smaller than this (in absolute value) are treated as zero when they
// appear in a denominator, under a square root, or as a pivot.
inline constexpr double kSingularEps = 1e-14;

// Truncation shape shared by a family of jets: nx "base" variables carried to
// total degree <= order_x, ny "fiber" variables carried to total degree
// <= order_y.  A coefficient is stored for every multi-index m = (mx, my)
// with |mx| <= order_x and |my| <= order_y, so the two blocks truncate
// independently and products stay consistent inside the box.
//
// Spaces are interned: make() returns a pointer that stays valid for the
// lifetime of the process, and jets refer to their space by plain pointer.
class JetSpace {
public:
    static constexpr int kMaxVars = 8;
    static constexpr int kMaxOrder = 8;

    static const JetSpace* make(int nx, int ny, int order_x, int order_y);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nvars() const { return nx_ + ny_; }
    int order_x() const { return order_x_; }
    int order_y() const { return order_y_; }
    int size() const { return static_cast<int>(exps_.size()); }

    // Index of a multi-index inside this space, -1 if it falls outside the
    // truncation box.  Exponent vectors have nvars() entries, base variables
    // first.
    int find(const std::vector<int>& m) const;
    std::vector<int> exponents(int i) const;
    int degree_x(int i) const { return deg_x_[i]; }
    int degree_y(int i) const { return deg_y_[i]; }

    // Index of m + e_var given the index of m, -1 if the result leaves the
    // box.  Used for derivative extraction.
    int raise(int i, int var) const { return raise_[var][i]; }

    // m! as a double, for converting Taylor coefficients into partials.
    double factorial(int i) const { return fact_[i]; }

    struct Triple {
        std::int32_t a, b, c;
    };
    // All (a, b, c) with exps[a] + exps[b] == exps[c]; products accumulate
    // r[c] += u[a] * v[b].  Sorted by c so accumulation is cache friendly.
    const std::vector<Triple>& triples() const { return triples_; }

private:
    using Exps = std::array<std::uint8_t, kMaxVars>;

    JetSpace(int nx, int ny, int order_x, int order_y);

    int pack(const Exps& e) const;

    int nx_, ny_, order_x_, order_y_;
    std::vector<Exps> exps_;
    std::vector<int> deg_x_, deg_y_;
    std::vector<double> fact_;
    std::vector<std::int32_t> lookup_; // mixed-radix key -> index, -1 outside
    std::array<int, kMaxVars> radix_{};
    std::array<std::vector<std::int32_t>, kMaxVars> raise_;
    std::vector<Triple> triples_;
};

// Truncated Taylor expansion of a scalar quantity around a base point.
// Coefficients use the Taylor convention: f = sum_m coeff(m) * dx^m, so the
// partial derivative for m is m! * coeff(m).
//
// Each jet tracks how many derivative orders per block are still trustworthy
// (valid_x, valid_y).  Differentiation shifts coefficients down and lowers
// the corresponding count; arithmetic takes the elementwise minimum.  Reading
// a partial beyond the valid orders throws OrderError.
class Jet {
public:
    Jet() : sp_(nullptr), vx_(0), vy_(0) {}

    static Jet constant(const JetSpace* sp, double v);
    // Coordinate jet: value v, unit first-order coefficient in `var`.
    static Jet coordinate(const JetSpace* sp, int var, double v);

    const JetSpace& space() const { return *sp_; }
    const JetSpace* space_ptr() const { return sp_; }
    bool valid() const { return sp_ != nullptr; }
    int valid_x() const { return vx_; }
    int valid_y() const { return vy_; }

    double value() const { return c_[0]; }
    double coeff(int i) const { return c_[i]; }
    double& coeff(int i) { return c_[i]; }

    // m! * coeff(m); OrderError if m exceeds the valid orders.
    double partial(const std::vector<int>& m) const;

    // d/d(var) as a jet.  Consumes one valid order in var's block.
    Jet derivative(int var) const;

    // Substitute this jet (as "g") into a univariate Taylor series
    // sum_k series[k] * (g - g.value())^k.  The series must carry at least
    // valid_x + valid_y + 1 terms.
    Jet compose(std::span<const double> series) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator+=(double s) { c_[0] += s; return *this; }
    Jet& operator-=(double s) { c_[0] -= s; return *this; }
    Jet& operator*=(double s);

    friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }
    friend Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
    friend Jet operator+(Jet a, double s) { a += s; return a; }
    friend Jet operator+(double s, Jet a) { a += s; return a; }
    friend Jet operator-(Jet a, double s) { a -= s; return a; }
    friend Jet operator-(double s, const Jet& a);
    friend Jet operator*(Jet a, double s) { a *= s; return a; }
    friend Jet operator*(double s, Jet a) { a *= s; return a; }
    friend Jet operator/(Jet a, double s);
    friend Jet operator-(const Jet& a);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);

    // Fused r += a * b, the workhorse of every contraction.
    void add_product(const Jet& a, const Jet& b);

    // Copy coefficients into another space over the same variable split.
    // Target orders must not exceed the valid orders here.
    Jet embed(const JetSpace* target) const;

private:
    void require_same(const Jet& o) const;

    const JetSpace* sp_;
    int vx_, vy_;
    std::vector<double> c_;
};

Jet inverse(const Jet& a);       // 1/a, |a.value()| >= kSingularEps
Jet sqrt(const Jet& a);          // a.value() >= kSingularEps
Jet pow_int(const Jet& a, int k);

// Jet of a smooth scalar field at x0, carrying all partials up to `order`.
// The field is evaluated on coordinate jets, so every stored partial is an
// exact derivative of the field's arithmetic.  `active` restricts which
// variables are differentiated; empty means all of them.
template <class F>
Jet lift(F&& f, const std::vector<double>& x0, int order,
         const std::vector<int>& active = {}) {
    const int n = static_cast<int>(x0.size());
    if (order < 0 || order > JetSpace::kMaxOrder)
        throw ConfigError("lift: unsupported derivative order " + std::to_string(order));
    const JetSpace* sp = JetSpace::make(n, 0, order, 0);
    std::vector<Jet> xs;
    xs.reserve(n);
    std::vector<char> on(n, active.empty() ? 1 : 0);
    for (int v : active) {
        if (v < 0 || v >= n) throw ConfigError("lift: active variable out of range");
        on[v] = 1;
    }
    for (int i = 0; i < n; ++i)
        xs.push_back(on[i] ? Jet::coordinate(sp, i, x0[i]) : Jet::constant(sp, x0[i]));
    return f(xs);
}

} // namespace finsler

#endif
