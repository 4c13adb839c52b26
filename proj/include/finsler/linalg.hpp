#ifndef FINSLER_LINALG_HPP
#define FINSLER_LINALG_HPP

#include <cmath>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/jet.hpp"

namespace finsler {

// Dense n*n matrices at desk scale (n <= 4), row major, templated so the
// same contractions run on plain doubles and on jets.

inline double zero_like(double) { return 0.0; }
inline Jet zero_like(const Jet& j) { return Jet::constant(j.space_ptr(), 0.0); }

template <class T>
T det(const std::vector<T>& a, int n) {
    switch (n) {
        case 1:
            return a[0];
        case 2:
            return a[0] * a[3] - a[1] * a[2];
        case 3:
            return a[0] * (a[4] * a[8] - a[5] * a[7]) -
                   a[1] * (a[3] * a[8] - a[5] * a[6]) +
                   a[2] * (a[3] * a[7] - a[4] * a[6]);
        case 4: {
            T d = zero_like(a[0]);
            std::vector<T> minor;
            minor.reserve(9);
            for (int j = 0; j < 4; ++j) {
                minor.clear();
                for (int r = 1; r < 4; ++r)
                    for (int c = 0; c < 4; ++c)
                        if (c != j) minor.push_back(a[4 * r + c]);
                const T m = a[j] * det(minor, 3);
                if (j % 2 == 0) d += m; else d -= m;
            }
            return d;
        }
        default:
            throw ConfigError("det: dimension beyond desk scale");
    }
}

inline Jet operator/(double s, const Jet& a) { return inverse(a) * s; }

inline double reciprocal(double d) {
    if (std::abs(d) < kSingularEps) throw SingularError("reciprocal: determinant ~ 0");
    return 1.0 / d;
}
inline Jet reciprocal(const Jet& d) { return inverse(d); }

// Inverse through the adjugate: division-free except for one divide by the
// determinant, which keeps jet arithmetic cheap and avoids pivoting.
template <class T>
std::vector<T> adjugate_inverse(const std::vector<T>& a, int n) {
    std::vector<T> inv(static_cast<std::size_t>(n) * n, zero_like(a[0]));
    const T dinv = reciprocal(det(a, n));
    if (n == 1) {
        inv[0] = dinv;
        return inv;
    }
    std::vector<T> minor;
    minor.reserve(9);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            minor.clear();
            for (int r = 0; r < n; ++r) {
                if (r == i) continue;
                for (int c = 0; c < n; ++c)
                    if (c != j) minor.push_back(a[n * r + c]);
            }
            T cof = det(minor, n - 1) * dinv;
            // adj transposes: inv[j][i] = cofactor(i, j) / det
            inv[n * j + i] = ((i + j) % 2 == 0) ? cof : -cof;
        }
    }
    return inv;
}

// Cholesky probe: true iff the symmetric matrix is positive definite.
inline bool is_positive_definite(std::vector<double> a, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = a[n * i + j];
            for (int k = 0; k < j; ++k) sum -= a[n * i + k] * a[n * j + k];
            if (i == j) {
                if (sum <= 0) return false;
                a[n * i + j] = std::sqrt(sum);
            } else {
                a[n * i + j] = sum / a[n * j + j];
            }
        }
    }
    return true;
}

template <class T>
T dot(const std::vector<T>& u, const std::vector<T>& v) {
    T s = zero_like(u[0]);
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

} // namespace finsler

#endif
