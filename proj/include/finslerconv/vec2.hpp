#pragma once

#include <cmath>

namespace finslerconv {

// Planar vector in pixel units. x runs along columns, y along rows (downward).
struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
    Vec2 perp() const { return {-y, x}; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Symmetric 2x2 matrix stored as three scalars, so symmetry holds structurally.
struct Sym2 {
    double m11{1.0};
    double m12{0.0};
    double m22{1.0};

    Sym2() = default;
    Sym2(double a, double b, double c) : m11(a), m12(b), m22(c) {}

    static Sym2 identity() { return {1.0, 0.0, 1.0}; }
    static Sym2 diag(double a, double b) { return {a, 0.0, b}; }

    Vec2 apply(const Vec2& u) const { return {m11 * u.x + m12 * u.y, m12 * u.x + m22 * u.y}; }
    double quad(const Vec2& u) const {
        return m11 * u.x * u.x + 2.0 * m12 * u.x * u.y + m22 * u.y * u.y;
    }
    double det() const { return m11 * m22 - m12 * m12; }
    double trace() const { return m11 + m22; }

    Sym2 inverse() const {
        const double d = det();
        return {m22 / d, -m12 / d, m11 / d};
    }

    // Eigenvalues in ascending order (closed form for symmetric 2x2).
    void eigenvalues(double& lo, double& hi) const {
        const double mean = 0.5 * (m11 + m22);
        const double disc = std::sqrt(0.25 * (m11 - m22) * (m11 - m22) + m12 * m12);
        lo = mean - disc;
        hi = mean + disc;
    }
    double min_eigenvalue() const {
        double lo, hi;
        eigenvalues(lo, hi);
        return lo;
    }
    double max_eigenvalue() const {
        double lo, hi;
        eigenvalues(lo, hi);
        return hi;
    }

    bool finite() const {
        return std::isfinite(m11) && std::isfinite(m12) && std::isfinite(m22);
    }
};

}  // namespace finslerconv
