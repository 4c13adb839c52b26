#ifndef FINSLER_FD_HPP
#define FINSLER_FD_HPP

#include <functional>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

// Finite-difference oracle used to cross-check jet-carried partials against
// an implementation-independent estimate.
//
// Mixed partials are built by nesting symmetric central differences, one
// variable at a time; the full nested estimator E(h) has error c*h^2 + O(h^4),
// so one Richardson level (4*E(h/2) - E(h)) / 3 leaves O(h^4).  Cost is
// 2^|m| evaluations per E.  Practical accuracy with the default step is
// ~1e-8 relative for |m| <= 3 on O(1) data, which is what the comparison
// tolerances assume.
class FdOracle {
public:
    using Fn = std::function<double(const std::vector<double>&)>;

    explicit FdOracle(Fn f, double h = 0.02) : f_(std::move(f)), h_(h) {
        if (h_ <= 0) throw ConfigError("FdOracle: step must be positive");
    }

    // d^|m| f / dx^m at x, |m| <= 4.
    double partial(const std::vector<double>& x, const std::vector<int>& m) const {
        int total = 0;
        for (int k : m) {
            if (k < 0) throw ConfigError("FdOracle: negative exponent");
            total += k;
        }
        if (total > 4) throw ConfigError("FdOracle: order beyond oracle limit");
        const double coarse = nested(x, m, h_);
        const double fine = nested(x, m, h_ / 2);
        return (4.0 * fine - coarse) / 3.0;
    }

private:
    double nested(std::vector<double> x, std::vector<int> m, double h) const {
        for (std::size_t v = 0; v < m.size(); ++v) {
            if (m[v] == 0) continue;
            m[v] -= 1;
            const double xv = x[v];
            x[v] = xv + h;
            const double plus = nested(x, m, h);
            x[v] = xv - h;
            const double minus = nested(x, m, h);
            return (plus - minus) / (2 * h);
        }
        return f_(x);
    }

    Fn f_;
    double h_;
};

} // namespace finsler

#endif
