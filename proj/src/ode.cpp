#include "finsler/ode.hpp"

#include <algorithm>

namespace finsler {

namespace {

// Dormand-Prince coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

} // namespace

OdeSolution Dopri5::integrate(double t0, double t1, std::vector<double> y0) const {
    const std::size_t n = y0.size();
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    OdeSolution out;
    out.t.push_back(t0);
    out.y.push_back(y0);
    if (t0 == t1) return out;

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y5(n);
    double t = t0;
    double h = dir * std::min(hmax_, std::abs(t1 - t0));
    long steps = 0;

    while (dir * (t1 - t) > 0) {
        if (++steps > 2000000) throw Error("Dopri5: step limit exceeded");
        if (dir * (t + h - t1) > 0) h = t1 - t;

        f_(t, y0, k1);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y0[i] + h * a21 * k1[i];
        f_(t + c2 * h, yt, k2);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y0[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f_(t + c3 * h, yt, k3);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y0[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f_(t + c4 * h, yt, k4);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y0[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f_(t + c5 * h, yt, k5);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y0[i] +
                    h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f_(t + h, yt, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y0[i] +
                    h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f_(t + h, y5, k7);

        double err = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc = atol_ + rtol_ * std::max(std::abs(y0[i]), std::abs(y5[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            t += h;
            y0 = y5;
            out.t.push_back(t);
            out.y.push_back(y0);
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.2);
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        if (std::abs(h) > hmax_) h = dir * hmax_;
        if (std::abs(h) < 1e-14) throw Error("Dopri5: step size underflow");
    }
    return out;
}

} // namespace finsler
