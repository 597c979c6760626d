#pragma once

#include <cmath>

namespace dynlap {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Row-major 2x2 matrix.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Vec2 operator*(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }

    double det() const { return a11 * a22 - a12 * a21; }
    Mat2 transpose() const { return {a11, a21, a12, a22}; }

    /// Inverse-transpose, the gradient-transform A = DT^{-T}.
    Mat2 inverse_transpose() const {
        const double d = det();
        return {a22 / d, -a21 / d, -a12 / d, a11 / d};
    }
};

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
inline void sym_eigenvalues(const Mat2& m, double& lo, double& hi) {
    const double mean = 0.5 * (m.a11 + m.a22);
    const double diff = 0.5 * (m.a11 - m.a22);
    const double r = std::sqrt(diff * diff + m.a12 * m.a21);
    lo = mean - r;
    hi = mean + r;
}

}  // namespace dynlap
