#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dynlap {

/// Eigendecomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Row-major input of size n*n. Eigenvalues ascending;
/// vectors[k*n + i] is component i of the k-th eigenvector.
struct SymEigen {
    std::vector<double> values;
    std::vector<double> vectors;
};

inline SymEigen sym_eigen(std::vector<double> a, int n) {
    if (static_cast<int>(a.size()) != n * n) throw std::invalid_argument("sym_eigen: bad size");
    std::vector<double> v(n * n, 0.0);
    for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;

    auto off = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
        return std::sqrt(2.0 * s);
    };
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    const double tol = 1e-15 * std::max(scale, 1.0);

    for (int sweep = 0; sweep < 100 && off() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[p * n + k], vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen out;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = a[i * n + i];
    // sort ascending, carrying the vectors along
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (out.values[order[j]] < out.values[order[i]]) std::swap(order[i], order[j]);
    SymEigen sorted;
    sorted.values.resize(n);
    sorted.vectors.resize(n * n);
    for (int k = 0; k < n; ++k) {
        sorted.values[k] = out.values[order[k]];
        for (int i = 0; i < n; ++i) sorted.vectors[k * n + i] = v[order[k] * n + i];
    }
    return sorted;
}

}  // namespace dynlap
