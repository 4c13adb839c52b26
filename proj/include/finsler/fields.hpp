#ifndef FINSLER_FIELDS_HPP
#define FINSLER_FIELDS_HPP

#include <functional>
#include <vector>

#include "finsler/jet.hpp"

namespace finsler {

using Point = std::vector<double>;

// Coefficient fields are closures evaluated on coordinate jets: the caller
// decides how many derivative orders to carry by choosing the space of the
// inputs, and every partial the result claims is exact.

// a_ij(x), row major, symmetric.
struct MetricField {
    int dim = 0;
    std::function<std::vector<Jet>(const std::vector<Jet>&)> eval;
};

// b_i(x).
struct OneFormField {
    int dim = 0;
    std::function<std::vector<Jet>(const std::vector<Jet>&)> eval;
};

struct ScalarField {
    int dim = 0;
    std::function<Jet(const std::vector<Jet>&)> eval;
};

// Coordinate jets for the base block of sp.
inline std::vector<Jet> coordinate_jets(const JetSpace* sp, const Point& x) {
    std::vector<Jet> c;
    c.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        c.push_back(Jet::coordinate(sp, static_cast<int>(i), x[i]));
    return c;
}

inline MetricField euclidean_metric(int n) {
    MetricField g;
    g.dim = n;
    g.eval = [n](const std::vector<Jet>& x) {
        std::vector<Jet> a(static_cast<std::size_t>(n) * n,
                           Jet::constant(x[0].space_ptr(), 0.0));
        for (int i = 0; i < n; ++i) a[n * i + i] = Jet::constant(x[0].space_ptr(), 1.0);
        return a;
    };
    return g;
}

inline OneFormField constant_form(Point b) {
    OneFormField f;
    f.dim = static_cast<int>(b.size());
    f.eval = [b](const std::vector<Jet>& x) {
        std::vector<Jet> v;
        v.reserve(b.size());
        for (double bi : b) v.push_back(Jet::constant(x[0].space_ptr(), bi));
        return v;
    };
    return f;
}

// Gradient of a scalar field with the same validity as the inputs: the field
// is re-evaluated in a private x-only space carrying one extra order, then
// each d_i f embeds back into the callers' space.  Inputs must be coordinate
// jets (which is how every pipeline here evaluates fields).
std::vector<Jet> grad_jets(const ScalarField& f, const std::vector<Jet>& x);

} // namespace finsler

#endif
