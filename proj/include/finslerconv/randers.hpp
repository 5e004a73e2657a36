#pragma once

#include <vector>

#include "finslerconv/vec2.hpp"

namespace finslerconv {

// Randers metric at one point: F(u) = sqrt(u' M u) + omega' u, with M
// symmetric positive definite and ||omega||_{M^-1} < 1 so F stays positive.
struct RandersParams {
    Sym2 m = Sym2::identity();
    Vec2 omega{0.0, 0.0};

    // Validated construction. Enforces finiteness, lambda_min(M) > 1e-12 and
    // ||omega||_{M^-1} < 1 - 1e-12; throws std::invalid_argument otherwise.
    static RandersParams make(const Sym2& m, const Vec2& omega);
    static RandersParams riemann(const Sym2& m) { return make(m, Vec2{0.0, 0.0}); }
};

// sqrt(omega' M^-1 omega).
double omega_dual_norm(const Sym2& m, const Vec2& omega);

// F(u); zero iff u is zero, positively homogeneous, asymmetric when omega != 0.
double randers_eval(const RandersParams& p, const Vec2& u);

// Point of the unit tangent circle at angle theta from the +x axis:
// y = u_theta / F(u_theta). Satisfies y' M y = (1 - omega' y)^2.
Vec2 unit_circle_point(const RandersParams& p, double theta);

// Dual metric parameters. With a = 1 - ||omega||^2_{M^-1}:
//   M* = (a M^-1 + (M^-1 w)(M^-1 w)') / a^2,  omega* = -(M^-1 w) / a.
// The map is an involution. Throws when a falls below 1e-10.
RandersParams dual_randers(const RandersParams& p);

// Largest eps with F(u) >= eps * ||u||_2 for all u, from the drift bound
// times the sqrt of the smallest eigenvalue of M:
//   F(u) >= (1 - ||omega||_{M^-1}) * ||u||_M >= (1 - ||omega||_{M^-1}) * sqrt(lambda_min) * ||u||_2.
double positivity_floor(const RandersParams& p);

// Positively homogeneous metric reconstructed from ordered samples of a unit
// tangent circle, interpolated as a convex polygon. F(u) is the scale lambda
// placing u/lambda on the polygon boundary.
class ReconstructedMetric {
public:
    // Samples must form a simple convex polygon strictly containing the
    // origin (cross-sign convexity test with tolerance 1e-10).
    explicit ReconstructedMetric(std::vector<Vec2> boundary);

    double operator()(const Vec2& u) const;
    std::size_t vertex_count() const { return boundary_.size(); }

private:
    std::vector<Vec2> boundary_;  // counterclockwise
};

// Per-pixel Randers parameters on an image grid.
struct MetricField {
    int height{0};
    int width{0};
    std::vector<RandersParams> params;

    MetricField() = default;
    MetricField(int h, int w)
        : height(h), width(w), params(static_cast<std::size_t>(h) * w) {}
    const RandersParams& at(int r, int c) const {
        return params[static_cast<std::size_t>(r) * width + c];
    }
    RandersParams& at(int r, int c) { return params[static_cast<std::size_t>(r) * width + c]; }
};

// Field of duals, for geodesic-ball machinery.
MetricField dual_field(const MetricField& field);

}  // namespace finslerconv
