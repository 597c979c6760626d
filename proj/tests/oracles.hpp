// Test-only reference implementations, independent of the library's solver
// paths: dense LU solves, finite-difference flow Jacobians, Halton points.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynlap/flow.hpp"
#include "dynlap/geometry.hpp"

namespace oracles {

/// Dense LU solve with partial pivoting (row-major a, n x n).
inline std::vector<double> lu_solve(std::vector<double> a, std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
        if (a[p * n + k] == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            std::swap(b[k], b[p]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double m = a[i * n + k] / a[k * n + k];
            a[i * n + k] = 0.0;
            for (int j = k + 1; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
            b[i] -= m * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
        b[i] = s / a[i * n + i];
    }
    return b;
}

/// Central finite-difference Jacobian of a flow map. The reference
/// trajectories are integrated much tighter than the checked ones so the
/// difference quotient is not dominated by integration noise.
inline dynlap::Mat2 fd_jacobian(const dynlap::FlowMap& flow_in, dynlap::Vec2 x, double h = 1e-6) {
    using dynlap::Vec2;
    dynlap::FlowMap flow = flow_in;
    flow.rel_tol = std::min(flow.rel_tol, 1e-11);
    flow.abs_tol = std::min(flow.abs_tol, 1e-11);
    const dynlap::Domain dom = flow.natural_domain();
    auto diff = [&](Vec2 a, Vec2 b) { return dynlap::unwrap_displacement(dom, a, b); };  // b - a
    const Vec2 fpx = dynlap::apply(flow, {x.x + h, x.y});
    const Vec2 fmx = dynlap::apply(flow, {x.x - h, x.y});
    const Vec2 fpy = dynlap::apply(flow, {x.x, x.y + h});
    const Vec2 fmy = dynlap::apply(flow, {x.x, x.y - h});
    const Vec2 dx = diff(fmx, fpx);
    const Vec2 dy = diff(fmy, fpy);
    return {dx.x / (2 * h), dy.x / (2 * h), dx.y / (2 * h), dy.y / (2 * h)};
}

/// Halton low-discrepancy sequence entry (bases 2 and 3).
inline dynlap::Vec2 halton(int index) {
    auto radical = [](int i, int base) {
        double f = 1.0, r = 0.0;
        for (int k = i + 1; k > 0; k /= base) {
            f /= base;
            r += f * (k % base);
        }
        return r;
    };
    return {radical(index, 2), radical(index, 3)};
}

}  // namespace oracles
