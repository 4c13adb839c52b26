#ifndef FINSLER_ODE_HPP
#define FINSLER_ODE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

// Dormand-Prince 5(4) with standard PI step control.  Accepted nodes are
// recorded so callers can re-expand locally; no interpolant is carried
// because downstream consumers want far more accuracy than the O(h^5)
// dense output would give.
struct OdeSolution {
    std::vector<double> t;
    std::vector<std::vector<double>> y; // y[k] at t[k]
};

class Dopri5 {
public:
    using Rhs = std::function<void(double, const std::vector<double>&, std::vector<double>&)>;

    Dopri5(Rhs f, double rtol = 1e-12, double atol = 1e-14, double hmax = 0.02)
        : f_(std::move(f)), rtol_(rtol), atol_(atol), hmax_(hmax) {}

    OdeSolution integrate(double t0, double t1, std::vector<double> y0) const;

private:
    Rhs f_;
    double rtol_, atol_, hmax_;
};

} // namespace finsler

#endif
