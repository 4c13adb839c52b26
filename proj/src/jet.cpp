#include "finsler/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace finsler {

namespace {

std::mutex g_registry_mutex;
std::map<std::uint32_t, std::unique_ptr<JetSpace>>& registry() {
    static std::map<std::uint32_t, std::unique_ptr<JetSpace>> r;
    return r;
}

} // namespace

const JetSpace* JetSpace::make(int nx, int ny, int order_x, int order_y) {
    if (nx < 0 || ny < 0 || nx + ny < 1 || nx + ny > kMaxVars)
        throw ConfigError("JetSpace: variable counts out of range");
    if (order_x < 0 || order_y < 0 || order_x > kMaxOrder || order_y > kMaxOrder)
        throw ConfigError("JetSpace: unsupported truncation order");
    const std::uint32_t key = static_cast<std::uint32_t>(nx) |
                              (static_cast<std::uint32_t>(ny) << 8) |
                              (static_cast<std::uint32_t>(order_x) << 16) |
                              (static_cast<std::uint32_t>(order_y) << 24);
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    auto& slot = registry()[key];
    if (!slot) slot.reset(new JetSpace(nx, ny, order_x, order_y));
    return slot.get();
}

int JetSpace::pack(const Exps& e) const {
    int key = 0, stride = 1;
    for (int v = 0; v < nvars(); ++v) {
        key += e[v] * stride;
        stride *= radix_[v];
    }
    return key;
}

JetSpace::JetSpace(int nx, int ny, int order_x, int order_y)
    : nx_(nx), ny_(ny), order_x_(order_x), order_y_(order_y) {
    long table = 1;
    for (int v = 0; v < nvars(); ++v) {
        radix_[v] = (v < nx_ ? order_x_ : order_y_) + 1;
        table *= radix_[v];
        if (table > (1L << 26))
            throw ConfigError("JetSpace: truncation box too large");
    }

    // Enumerate the box, degree-major so the zero multi-index lands first.
    Exps e{};
    for (long k = 0; k < table; ++k) {
        long rem = k;
        int dx = 0, dy = 0;
        for (int v = 0; v < nvars(); ++v) {
            e[v] = static_cast<std::uint8_t>(rem % radix_[v]);
            rem /= radix_[v];
            (v < nx_ ? dx : dy) += e[v];
        }
        if (dx <= order_x_ && dy <= order_y_) exps_.push_back(e);
    }
    std::sort(exps_.begin(), exps_.end(), [&](const Exps& a, const Exps& b) {
        int da = 0, db = 0;
        for (int v = 0; v < nvars(); ++v) { da += a[v]; db += b[v]; }
        if (da != db) return da < db;
        return pack(a) < pack(b);
    });

    lookup_.assign(table, -1);
    deg_x_.resize(size());
    deg_y_.resize(size());
    fact_.resize(size());
    for (int i = 0; i < size(); ++i) {
        lookup_[pack(exps_[i])] = i;
        int dx = 0, dy = 0;
        double f = 1.0;
        for (int v = 0; v < nvars(); ++v) {
            (v < nx_ ? dx : dy) += exps_[i][v];
            for (int j = 2; j <= exps_[i][v]; ++j) f *= j;
        }
        deg_x_[i] = dx;
        deg_y_[i] = dy;
        fact_[i] = f;
    }

    for (int v = 0; v < nvars(); ++v) {
        raise_[v].assign(size(), -1);
        for (int i = 0; i < size(); ++i) {
            Exps up = exps_[i];
            if ((v < nx_ ? deg_x_[i] : deg_y_[i]) + 1 > (v < nx_ ? order_x_ : order_y_))
                continue;
            up[v] += 1;
            raise_[v][i] = lookup_[pack(up)];
        }
    }

    // Product support.  Block-degree admissibility guarantees the packed keys
    // add without carries, so the target is a single table lookup.
    for (int i = 0; i < size(); ++i) {
        const int pi = pack(exps_[i]);
        for (int j = 0; j < size(); ++j) {
            if (deg_x_[i] + deg_x_[j] > order_x_ || deg_y_[i] + deg_y_[j] > order_y_)
                continue;
            triples_.push_back({static_cast<std::int32_t>(i),
                                static_cast<std::int32_t>(j),
                                lookup_[pi + pack(exps_[j])]});
        }
    }
    std::sort(triples_.begin(), triples_.end(), [](const Triple& a, const Triple& b) {
        if (a.c != b.c) return a.c < b.c;
        return a.a < b.a;
    });
}

int JetSpace::find(const std::vector<int>& m) const {
    if (static_cast<int>(m.size()) != nvars()) return -1;
    Exps e{};
    int dx = 0, dy = 0;
    for (int v = 0; v < nvars(); ++v) {
        if (m[v] < 0) return -1;
        (v < nx_ ? dx : dy) += m[v];
        if (m[v] >= radix_[v]) return -1;
        e[v] = static_cast<std::uint8_t>(m[v]);
    }
    if (dx > order_x_ || dy > order_y_) return -1;
    return lookup_[pack(e)];
}

std::vector<int> JetSpace::exponents(int i) const {
    std::vector<int> m(nvars());
    for (int v = 0; v < nvars(); ++v) m[v] = exps_[i][v];
    return m;
}

Jet Jet::constant(const JetSpace* sp, double v) {
    Jet j;
    j.sp_ = sp;
    j.vx_ = sp->order_x();
    j.vy_ = sp->order_y();
    j.c_.assign(sp->size(), 0.0);
    j.c_[0] = v;
    return j;
}

Jet Jet::coordinate(const JetSpace* sp, int var, double v) {
    if (var < 0 || var >= sp->nvars())
        throw ConfigError("Jet::coordinate: variable out of range");
    Jet j = constant(sp, v);
    std::vector<int> m(sp->nvars(), 0);
    m[var] = 1;
    const int i = sp->find(m);
    // in an order-zero block the truncation keeps only the value
    if (i >= 0) j.c_[i] = 1.0;
    return j;
}

void Jet::require_same(const Jet& o) const {
    if (sp_ != o.sp_) throw ConfigError("Jet: operands live in different spaces");
}

double Jet::partial(const std::vector<int>& m) const {
    const int i = sp_->find(m);
    if (i < 0) throw OrderError("Jet::partial: multi-index outside truncation box");
    if (sp_->degree_x(i) > vx_ || sp_->degree_y(i) > vy_)
        throw OrderError("Jet::partial: derivative order no longer carried");
    return sp_->factorial(i) * c_[i];
}

Jet Jet::derivative(int var) const {
    if (var < 0 || var >= sp_->nvars())
        throw ConfigError("Jet::derivative: variable out of range");
    const bool in_x = var < sp_->nx();
    if ((in_x ? vx_ : vy_) < 1)
        throw OrderError("Jet::derivative: no derivative orders left in this block");
    Jet r;
    r.sp_ = sp_;
    r.vx_ = vx_ - (in_x ? 1 : 0);
    r.vy_ = vy_ - (in_x ? 0 : 1);
    r.c_.assign(sp_->size(), 0.0);
    for (int i = 0; i < sp_->size(); ++i) {
        const int up = sp_->raise(i, var);
        if (up >= 0) r.c_[i] = c_[up] * (sp_->exponents(i)[var] + 1);
    }
    return r;
}

Jet& Jet::operator+=(const Jet& o) {
    require_same(o);
    vx_ = std::min(vx_, o.vx_);
    vy_ = std::min(vy_, o.vy_);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    require_same(o);
    vx_ = std::min(vx_, o.vx_);
    vy_ = std::min(vy_, o.vy_);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
}

Jet operator-(double s, const Jet& a) {
    Jet r = -a;
    r += s;
    return r;
}

Jet operator/(Jet a, double s) {
    if (std::abs(s) < kSingularEps) throw SingularError("Jet: division by ~0 scalar");
    a *= 1.0 / s;
    return a;
}

Jet operator-(const Jet& a) {
    Jet r = a;
    r *= -1.0;
    return r;
}

void Jet::add_product(const Jet& a, const Jet& b) {
    require_same(a);
    require_same(b);
    vx_ = std::min({vx_, a.vx_, b.vx_});
    vy_ = std::min({vy_, a.vy_, b.vy_});
    const double* pa = a.c_.data();
    const double* pb = b.c_.data();
    double* pr = c_.data();
    for (const auto& t : sp_->triples()) pr[t.c] += pa[t.a] * pb[t.b];
}

Jet operator*(const Jet& a, const Jet& b) {
    Jet r = Jet::constant(a.sp_, 0.0);
    r.vx_ = std::min(a.vx_, b.vx_);
    r.vy_ = std::min(a.vy_, b.vy_);
    const double* pa = a.c_.data();
    const double* pb = b.c_.data();
    double* pr = r.c_.data();
    for (const auto& t : a.sp_->triples()) pr[t.c] += pa[t.a] * pb[t.b];
    return r;
}

Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }

Jet Jet::compose(std::span<const double> series) const {
    const int nil = vx_ + vy_;
    if (static_cast<int>(series.size()) < nil + 1)
        throw OrderError("Jet::compose: series too short for the valid orders");
    Jet delta = *this;
    delta.c_[0] = 0.0;
    Jet r = constant(sp_, series[nil]);
    r.vx_ = vx_;
    r.vy_ = vy_;
    for (int k = nil - 1; k >= 0; --k) {
        r = r * delta;
        r.c_[0] += series[k];
    }
    return r;
}

Jet Jet::embed(const JetSpace* target) const {
    if (target->nx() != sp_->nx() ||
        (sp_->ny() != 0 && target->ny() != sp_->ny()))
        throw ConfigError("Jet::embed: incompatible variable split");
    if (target->order_x() > vx_ || (sp_->ny() != 0 && target->order_y() > vy_))
        throw OrderError("Jet::embed: target wants orders this jet no longer carries");
    Jet r;
    r.sp_ = target;
    r.vx_ = target->order_x();
    r.vy_ = target->order_y();
    r.c_.assign(target->size(), 0.0);
    const bool pad_y = sp_->ny() == 0 && target->ny() > 0;
    std::vector<int> m;
    for (int i = 0; i < target->size(); ++i) {
        if (pad_y && target->degree_y(i) > 0) continue; // no fiber dependence
        m = target->exponents(i);
        if (pad_y) m.resize(sp_->nvars());
        const int src = sp_->find(m);
        if (src >= 0) r.c_[i] = c_[src];
    }
    return r;
}

Jet inverse(const Jet& a) {
    const double v = a.value();
    if (std::abs(v) < kSingularEps) throw SingularError("inverse: value too close to 0");
    const int nil = a.valid_x() + a.valid_y();
    std::vector<double> s(nil + 1);
    double p = 1.0 / v;
    for (int k = 0; k <= nil; ++k) {
        s[k] = p;
        p *= -1.0 / v;
    }
    return a.compose(s);
}

Jet sqrt(const Jet& a) {
    const double v = a.value();
    if (v < kSingularEps) throw SingularError("sqrt: value not positive");
    const int nil = a.valid_x() + a.valid_y();
    std::vector<double> s(nil + 1);
    const double rv = std::sqrt(v);
    double binom = 1.0, scale = 1.0;
    for (int k = 0; k <= nil; ++k) {
        s[k] = rv * binom * scale;
        binom *= (0.5 - k) / (k + 1);
        scale /= v;
    }
    return a.compose(s);
}

Jet pow_int(const Jet& a, int k) {
    if (k < 0) return pow_int(inverse(a), -k);
    if (k == 0) return Jet::constant(a.space_ptr(), 1.0);
    Jet r = a;
    for (int i = 1; i < k; ++i) r = r * a; // exponents here are tiny
    return r;
}

} // namespace finsler
