#include "finslerconv/randers.hpp"

#include <cmath>
#include <stdexcept>

namespace finslerconv {

namespace {

constexpr double kMinEigenvalue = 1e-12;
constexpr double kOmegaMargin = 1e-12;
constexpr double kDualAlphaTol = 1e-10;

}  // namespace

double omega_dual_norm(const Sym2& m, const Vec2& omega) {
    const Vec2 v = m.inverse().apply(omega);
    return std::sqrt(std::max(0.0, omega.dot(v)));
}

RandersParams RandersParams::make(const Sym2& m, const Vec2& omega) {
    if (!m.finite() || !omega.finite())
        throw std::invalid_argument("RandersParams: non-finite parameters");
    if (!(m.min_eigenvalue() > kMinEigenvalue))
        throw std::invalid_argument("RandersParams: M not positive definite");
    if (!(omega_dual_norm(m, omega) < 1.0 - kOmegaMargin))
        throw std::invalid_argument("RandersParams: ||omega||_{M^-1} not < 1");
    RandersParams p;
    p.m = m;
    p.omega = omega;
    return p;
}

double randers_eval(const RandersParams& p, const Vec2& u) {
    if (!u.finite()) throw std::invalid_argument("randers_eval: non-finite tangent vector");
    return std::sqrt(p.m.quad(u)) + p.omega.dot(u);
}

Vec2 unit_circle_point(const RandersParams& p, double theta) {
    const Vec2 u{std::cos(theta), std::sin(theta)};
    return u * (1.0 / randers_eval(p, u));
}

RandersParams dual_randers(const RandersParams& p) {
    const Sym2 minv = p.m.inverse();
    const Vec2 v = minv.apply(p.omega);       // M^-1 w
    const double alpha = 1.0 - p.omega.dot(v);
    if (!(alpha > kDualAlphaTol))
        throw std::invalid_argument("dual_randers: metric too close to degenerate");
    const double inv_a2 = 1.0 / (alpha * alpha);
    Sym2 mstar{(alpha * minv.m11 + v.x * v.x) * inv_a2, (alpha * minv.m12 + v.x * v.y) * inv_a2,
               (alpha * minv.m22 + v.y * v.y) * inv_a2};
    const Vec2 wstar = v * (-1.0 / alpha);
    return RandersParams::make(mstar, wstar);
}

double positivity_floor(const RandersParams& p) {
    // |w'u| <= ||w||_{M^-1} ||u||_M by Cauchy-Schwarz in the M inner product,
    // and ||u||_M >= sqrt(lambda_min(M)) ||u||_2; the two bounds compose.
    const double drift = 1.0 - omega_dual_norm(p.m, p.omega);
    return drift * std::sqrt(p.m.min_eigenvalue());
}

ReconstructedMetric::ReconstructedMetric(std::vector<Vec2> boundary) : boundary_(std::move(boundary)) {
    const std::size_t n = boundary_.size();
    if (n < 3) throw std::invalid_argument("ReconstructedMetric: need at least 3 samples");

    // Orient counterclockwise by signed area.
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) area2 += boundary_[i].cross(boundary_[(i + 1) % n]);
    if (area2 < 0.0) {
        for (std::size_t i = 0, j = n - 1; i < j; ++i, --j) std::swap(boundary_[i], boundary_[j]);
    }

    constexpr double kConvexTol = 1e-10;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = boundary_[i];
        const Vec2& b = boundary_[(i + 1) % n];
        const Vec2& c = boundary_[(i + 2) % n];
        const Vec2 e1 = b - a;
        const Vec2 e2 = c - b;
        const double scale = e1.norm() * e2.norm();
        if (scale == 0.0 || e1.cross(e2) < -kConvexTol * scale)
            throw std::invalid_argument("ReconstructedMetric: samples not convex");
        // Origin strictly inside: each edge must subtend positive area at 0.
        const double tri = a.cross(b);
        if (!(tri > 1e-12 * a.norm() * b.norm()))
            throw std::invalid_argument("ReconstructedMetric: origin not strictly inside");
    }
}

double ReconstructedMetric::operator()(const Vec2& u) const {
    if (!u.finite()) throw std::invalid_argument("ReconstructedMetric: non-finite query");
    if (u.x == 0.0 && u.y == 0.0) return 0.0;
    const std::size_t n = boundary_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = boundary_[i];
        const Vec2& b = boundary_[(i + 1) % n];
        // u lies in the CCW angular sector [a, b)?
        if (a.cross(u) >= 0.0 && u.cross(b) > 0.0) {
            const Vec2 e = b - a;
            const double denom = u.cross(e);
            // Parallel is impossible for a sector edge with 0 strictly inside.
            const double t = a.cross(e) / denom;  // intersection is t*u
            return 1.0 / t;
        }
    }
    // Fallback: u positively parallel to some vertex direction.
    std::size_t best = 0;
    double best_align = -2.0;
    const double un = u.norm();
    for (std::size_t i = 0; i < n; ++i) {
        const double align = boundary_[i].dot(u) / (boundary_[i].norm() * un);
        if (align > best_align) {
            best_align = align;
            best = i;
        }
    }
    return un / boundary_[best].norm();
}

MetricField dual_field(const MetricField& field) {
    MetricField out(field.height, field.width);
    for (std::size_t i = 0; i < field.params.size(); ++i) out.params[i] = dual_randers(field.params[i]);
    return out;
}

}  // namespace finslerconv
