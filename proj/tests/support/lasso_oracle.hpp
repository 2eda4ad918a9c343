#pragma once

// Exhaustive lasso solver for tiny instances, written without the library.
//
// Every lasso minimizer with support S and sign pattern s satisfies
//   A_S^T A_S x_S = A_S^T y - lambda * s,  sign(x_S) = s.
// Enumerating all supports of size <= rank and all sign patterns, keeping the
// sign-consistent candidates and taking the best objective, yields the global
// minimum whenever A is in general position.

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // row-major, Mat[i][j]
using Vec = std::vector<double>;

inline double lasso_value(const Mat& a, const Vec& y, const Vec& x, double lambda) {
    double data = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double r = -y[i];
        for (std::size_t j = 0; j < x.size(); ++j) r += a[i][j] * x[j];
        data += r * r;
    }
    double l1 = 0.0;
    for (double v : x) l1 += std::abs(v);
    return 0.5 * data + lambda * l1;
}

// Gaussian elimination with partial pivoting; false when singular.
inline bool solve_linear(Mat m, Vec b, Vec& out) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        }
        if (std::abs(m[piv][c]) < 1e-12) return false;
        std::swap(m[piv], m[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
            b[r] -= f * b[c];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= m[c][k] * out[k];
        out[c] = s / m[c][c];
    }
    return true;
}

struct LassoOptimum {
    Vec x;
    double value = std::numeric_limits<double>::infinity();
};

inline LassoOptimum brute_force_lasso(const Mat& a, const Vec& y, double lambda) {
    const std::size_t m = a.size();
    const std::size_t n = a.front().size();
    LassoOptimum best;
    best.x.assign(n, 0.0);
    best.value = lasso_value(a, y, best.x, lambda);

    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::size_t> support;
        for (std::size_t j = 0; j < n; ++j) {
            if (mask & (1u << j)) support.push_back(j);
        }
        const std::size_t k = support.size();
        if (k > m) continue;

        Mat gram(k, Vec(k, 0.0));
        Vec rhs(k, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t i = 0; i < m; ++i) rhs[p] += a[i][support[p]] * y[i];
            for (std::size_t q = 0; q < k; ++q) {
                for (std::size_t i = 0; i < m; ++i) gram[p][q] += a[i][support[p]] * a[i][support[q]];
            }
        }
        for (unsigned signs = 0; signs < (1u << k); ++signs) {
            Vec b = rhs;
            for (std::size_t p = 0; p < k; ++p) b[p] -= lambda * ((signs & (1u << p)) ? -1.0 : 1.0);
            Vec xs;
            if (!solve_linear(gram, b, xs)) continue;
            bool consistent = true;
            for (std::size_t p = 0; p < k; ++p) {
                const double want = (signs & (1u << p)) ? -1.0 : 1.0;
                if (xs[p] * want <= 0.0) consistent = false;
            }
            if (!consistent) continue;
            Vec x(n, 0.0);
            for (std::size_t p = 0; p < k; ++p) x[support[p]] = xs[p];
            const double v = lasso_value(a, y, x, lambda);
            if (v < best.value) {
                best.value = v;
                best.x = x;
            }
        }
    }
    return best;
}

}  // namespace oracle
