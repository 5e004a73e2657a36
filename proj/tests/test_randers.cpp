#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "finslerconv/randers.hpp"
#include "finslerconv/rng.hpp"
#include "oracles.hpp"

using namespace finslerconv;

TEST_CASE("randers_eval matches closed-form values") {
    const RandersParams euclid = RandersParams::riemann(Sym2::identity());
    CHECK(randers_eval(euclid, Vec2{3, 4}) == doctest::Approx(5.0).epsilon(1e-14));

    const RandersParams drift = RandersParams::make(Sym2::identity(), Vec2{0.5, 0.0});
    CHECK(randers_eval(drift, Vec2{1, 0}) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(randers_eval(drift, Vec2{-1, 0}) == doctest::Approx(0.5).epsilon(1e-14));

    // Hand-evaluated: sqrt(4*1 + 1*4) + 0.3*2 = sqrt(8) + 0.6.
    const RandersParams aniso = RandersParams::make(Sym2::diag(4, 1), Vec2{0, 0.3});
    const double expect = std::sqrt(8.0) + 0.6;
    CHECK(randers_eval(aniso, Vec2{1, 2}) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(expect == doctest::Approx(3.428427).epsilon(1e-6));

    CHECK(randers_eval(euclid, Vec2{0, 0}) == 0.0);
    CHECK_THROWS_AS(randers_eval(euclid, Vec2{std::nan(""), 0}), std::invalid_argument);
}

TEST_CASE("RandersParams construction enforces invariants") {
    CHECK_THROWS_AS(RandersParams::make(Sym2::identity(), Vec2{1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(RandersParams::make(Sym2::diag(1.0, -0.5), Vec2{0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(RandersParams::make(Sym2::diag(0.0, 1.0), Vec2{0, 0}), std::invalid_argument);
    CHECK_NOTHROW(RandersParams::make(Sym2::identity(), Vec2{0.999, 0.0}));
}

TEST_CASE("unit_circle_point lands on the unit sphere") {
    const RandersParams euclid = RandersParams::riemann(Sym2::identity());
    for (double theta : {0.1, 1.3, 4.0}) {
        const Vec2 y = unit_circle_point(euclid, theta);
        CHECK(y.x == doctest::Approx(std::cos(theta)).epsilon(1e-14));
        CHECK(y.y == doctest::Approx(std::sin(theta)).epsilon(1e-14));
    }

    const RandersParams stretched = RandersParams::riemann(Sym2::diag(0.25, 1.0));
    const Vec2 y0 = unit_circle_point(stretched, 0.0);
    CHECK(y0.x == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(y0.y == doctest::Approx(0.0));

    const RandersParams drift = RandersParams::make(Sym2::identity(), Vec2{0.5, 0.0});
    CHECK(unit_circle_point(drift, 0.0).x == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(unit_circle_point(drift, M_PI).x == doctest::Approx(-2.0).epsilon(1e-13));

    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        const RandersParams p = oracles::random_params(rng);
        const Vec2 y = unit_circle_point(p, rng.uniform(0.0, 2 * M_PI));
        CHECK(randers_eval(p, y) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dual_randers closed forms and brute-force oracle") {
    const RandersParams euclid = RandersParams::riemann(Sym2::identity());
    const RandersParams de = dual_randers(euclid);
    CHECK(de.m.m11 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(de.m.m22 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(de.omega.x == 0.0);

    const RandersParams aniso = RandersParams::riemann(Sym2::diag(4, 1));
    const RandersParams da = dual_randers(aniso);
    CHECK(da.m.m11 == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(da.m.m22 == doctest::Approx(1.0).epsilon(1e-14));

    // alpha = 3/4, M* = diag(16/9, 4/3), omega* = (-2/3, 0).
    const RandersParams drift = RandersParams::make(Sym2::identity(), Vec2{0.5, 0.0});
    const RandersParams dd = dual_randers(drift);
    CHECK(dd.m.m11 == doctest::Approx(16.0 / 9.0).epsilon(1e-13));
    CHECK(dd.m.m22 == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
    CHECK(dd.m.m12 == doctest::Approx(0.0));
    CHECK(dd.omega.x == doctest::Approx(-2.0 / 3.0).epsilon(1e-13));

    // Dual evaluation against direct maximization of u'v over the unit ball.
    Rng rng(7);
    for (int i = 0; i < 25; ++i) {
        const RandersParams p = oracles::random_params(rng, 100.0, 0.8);
        const RandersParams d = dual_randers(p);
        const double phi = rng.uniform(0.0, 2 * M_PI);
        const Vec2 u{std::cos(phi), std::sin(phi)};
        const double want = oracles::ref_dual_eval(p, u);
        CHECK(randers_eval(d, u) == doctest::Approx(want).epsilon(1e-3));
    }

    // Involution.
    for (int i = 0; i < 100; ++i) {
        const RandersParams p = oracles::random_params(rng);
        const RandersParams q = dual_randers(dual_randers(p));
        const double scale = std::max(1.0, p.m.max_eigenvalue());
        CHECK(std::abs(q.m.m11 - p.m.m11) < 1e-8 * scale);
        CHECK(std::abs(q.m.m12 - p.m.m12) < 1e-8 * scale);
        CHECK(std::abs(q.m.m22 - p.m.m22) < 1e-8 * scale);
        CHECK(std::abs(q.omega.x - p.omega.x) < 1e-8 * scale);
        CHECK(std::abs(q.omega.y - p.omega.y) < 1e-8 * scale);
    }
}

TEST_CASE("positivity_floor values and lower-bound property") {
    CHECK(positivity_floor(RandersParams::riemann(Sym2::identity())) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(positivity_floor(RandersParams::make(Sym2::identity(), Vec2{0.9, 0.0})) ==
          doctest::Approx(0.1).epsilon(1e-12));
    // F(u) = 2 ||u|| exactly for M = diag(4,4).
    const RandersParams big = RandersParams::riemann(Sym2::diag(4, 4));
    CHECK(positivity_floor(big) == doctest::Approx(2.0).epsilon(1e-14));
    Rng rng(91);
    for (int i = 0; i < 100; ++i) {
        const Vec2 u{rng.normal(), rng.normal()};
        CHECK(randers_eval(big, u) >= 2.0 * u.norm() - 1e-12);
    }

    for (int i = 0; i < 300; ++i) {
        const RandersParams p = oracles::random_params(rng);
        const double floor = positivity_floor(p);
        for (int j = 0; j < 20; ++j) {
            const Vec2 u{rng.normal(), rng.normal()};
            CHECK(randers_eval(p, u) >= floor * u.norm() - 1e-12);
        }
    }
}

TEST_CASE("metric reconstruction from unit-ball samples") {
    // Euclidean circle: exact at vertex directions.
    std::vector<Vec2> circle;
    for (int i = 0; i < 64; ++i)
        circle.push_back(Vec2{std::cos(2 * M_PI * i / 64), std::sin(2 * M_PI * i / 64)});
    const ReconstructedMetric rec_circle(circle);
    CHECK(rec_circle(Vec2{2, 0}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rec_circle(Vec2{0, 0}) == 0.0);

    // Round trip through a drifted metric.
    const RandersParams drift = RandersParams::make(Sym2::identity(), Vec2{0.5, 0.0});
    std::vector<Vec2> boundary;
    for (int i = 0; i < 256; ++i) boundary.push_back(unit_circle_point(drift, 2 * M_PI * i / 256));
    const ReconstructedMetric rec(boundary);
    CHECK(rec(Vec2{1, 0}) == doctest::Approx(1.5).epsilon(1e-3));
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const double phi = rng.uniform(0.0, 2 * M_PI);
        const Vec2 u = Vec2{std::cos(phi), std::sin(phi)} * rng.uniform(0.5, 3.0);
        CHECK(rec(u) == doctest::Approx(randers_eval(drift, u)).epsilon(1e-3));
    }

    // Max-norm ball from the square corners: the +x ray hits an edge midpoint.
    const std::vector<Vec2> square{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    const ReconstructedMetric rec_sq(square);
    CHECK(rec_sq(Vec2{1, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rec_sq(Vec2{3, 3}) == doctest::Approx(3.0).epsilon(1e-12));

    // Rejections: non-convex polygon, origin outside, too few samples.
    CHECK_THROWS_AS(ReconstructedMetric({{1, 0}, {0.1, 0.1}, {0, 1}, {-1, 0}, {0, -1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ReconstructedMetric({{2, 1}, {3, 1}, {3, 2}, {2, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(ReconstructedMetric({{1, 0}, {0, 1}}), std::invalid_argument);
}

TEST_CASE("dual_randers rejects near-degenerate drift") {
    const RandersParams p = RandersParams::make(Sym2::identity(), Vec2{1.0 - 1e-11, 0.0});
    CHECK_THROWS_AS(dual_randers(p), std::invalid_argument);
}
