#include <doctest.h>

#include <cmath>

#include "finslerconv/heuristic.hpp"
#include "finslerconv/randers.hpp"
#include "oracles.hpp"

using namespace finslerconv;

TEST_CASE("constant image gives the isotropic scale") {
    const GrayImage flat(16, 16, 0.31);
    HeuristicConfig hc;  // eps_omega = 1
    const MetricField field = heuristic_field(flat, hc);
    for (const RandersParams& p : field.params) {
        CHECK(p.m.m11 == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(p.m.m22 == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(p.m.m12 == 0.0);
        CHECK(p.omega.x == 0.0);
        CHECK(p.omega.y == 0.0);
    }
    // Drift stays zero on zero gradients even when asymmetry is allowed.
    hc.eps_omega = 0.2;
    const MetricField f2 = heuristic_field(flat, hc);
    for (const RandersParams& p : f2.params) {
        CHECK(p.omega.x == 0.0);
        CHECK(p.omega.y == 0.0);
    }
}

TEST_CASE("edge pixels get the stated eigenvalue pair") {
    // Clean vertical step: gradient peaks at the two columns nearest the edge.
    GrayImage step(24, 24, 0.0);
    for (int r = 0; r < 24; ++r)
        for (int c = 12; c < 24; ++c) step.at(r, c) = 1.0;
    HeuristicConfig hc;  // iota 0.1, alpha 100
    const MetricField field = heuristic_field(step, hc);

    const RandersParams& p = field.at(12, 12);  // max-gradient pixel: rel = 1
    double hi, lo, ex, ey;
    oracles::ref_eigen(oracles::Mat2::from_sym(p.m), hi, lo, ex, ey);
    CHECK(hi == doctest::Approx(0.1 * 101.0).epsilon(1e-12));
    CHECK(lo == doctest::Approx(0.1 / 101.0).epsilon(1e-12));
    // Principal direction along the (horizontal) gradient.
    CHECK(std::abs(ex) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ey) < 1e-9);

    // Unit-ball semi-axes: across-edge axis is 101x the along-gradient one.
    const Vec2 along = unit_circle_point(p, 0.0);
    const Vec2 across = unit_circle_point(p, M_PI / 2.0);
    CHECK(across.norm() / along.norm() == doctest::Approx(101.0).epsilon(1e-10));
    CHECK(across.norm() == doctest::Approx(std::sqrt(101.0 / 0.1)).epsilon(1e-10));

    // det(M) = iota^2 everywhere.
    for (const RandersParams& q : field.params)
        CHECK(q.m.det() == doctest::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("geodesic-ball variant uses alpha=10, iota=1") {
    const GrayImage flat(8, 8, 0.5);
    const MetricField field = heuristic_field_ugb(flat);
    for (const RandersParams& p : field.params) {
        CHECK(p.m.m11 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.m.m22 == doctest::Approx(1.0).epsilon(1e-14));
    }

    GrayImage step(24, 24, 0.0);
    for (int r = 0; r < 24; ++r)
        for (int c = 12; c < 24; ++c) step.at(r, c) = 1.0;
    const MetricField f2 = heuristic_field_ugb(step);
    double hi, lo, ex, ey;
    oracles::ref_eigen(oracles::Mat2::from_sym(f2.at(12, 12).m), hi, lo, ex, ey);
    CHECK(hi / lo == doctest::Approx(11.0 * 11.0).epsilon(1e-10));
    // All entries are valid metric parameters.
    for (const RandersParams& p : f2.params) {
        CHECK(p.m.min_eigenvalue() > 1e-12);
        CHECK(omega_dual_norm(p.m, p.omega) < 1.0);
    }
}

TEST_CASE("drift options") {
    GrayImage ramp(12, 12);
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 12; ++c) ramp.at(r, c) = 0.05 * c;
    HeuristicConfig hc;
    hc.eps_omega = 0.4;
    const MetricField grad_dir = heuristic_field(ramp, hc);
    const Vec2 w = grad_dir.at(6, 6).omega;
    CHECK(w.x > 0.0);  // along the gradient (+x on a column ramp)
    CHECK(std::abs(w.y) < 1e-12 * std::abs(w.x));

    hc.omega_dir = OmegaDir::GradPerp;
    const MetricField perp_dir = heuristic_field(ramp, hc);
    const Vec2 wp = perp_dir.at(6, 6).omega;
    CHECK(std::abs(wp.x) < 1e-12 * std::abs(wp.y));
    CHECK(wp.y > 0.0);

    // Drift norm target: (1 - eps_omega) * n / (n + eps) in the M-dual norm.
    const RandersParams& p = grad_dir.at(6, 6);
    const VecField g = sobel_gradient(ramp, hc.pad);
    const Vec2 wt = g.at(6, 6) * (1.0 / (g.at(6, 6).norm() + hc.eps));
    const double n = omega_dual_norm(p.m, wt);
    CHECK(omega_dual_norm(p.m, p.omega) ==
          doctest::Approx((1.0 - 0.4) * n / (n + hc.eps)).epsilon(1e-10));
}

TEST_CASE("radius convention switch") {
    const GrayImage flat(6, 6, 0.2);
    HeuristicConfig hc;
    hc.radius_convention = RadiusConvention::Linear;
    const MetricField field = heuristic_field(flat, hc);
    // Linear convention squares the eigenvalues: unit ball radius 1/iota.
    CHECK(field.at(3, 3).m.m11 == doctest::Approx(0.01).epsilon(1e-12));
    const Vec2 y = unit_circle_point(field.at(3, 3), 0.0);
    CHECK(y.norm() == doctest::Approx(10.0).epsilon(1e-12));
}
