#include <doctest.h>

#include <cmath>

#include "finslerconv/metric_params.hpp"
#include "finslerconv/rng.hpp"
#include "oracles.hpp"

using namespace finslerconv;

namespace {

void check_against_ref(const RandersParams& got, const oracles::RefMetric& ref,
                       double tol = 1e-12) {
    CHECK(got.m.m11 == doctest::Approx(ref.m.a).epsilon(tol));
    CHECK(got.m.m12 == doctest::Approx(ref.m.b).epsilon(tol));
    CHECK(got.m.m22 == doctest::Approx(ref.m.d).epsilon(tol));
    CHECK(got.omega.x == doctest::Approx(ref.w1).epsilon(tol));
    CHECK(got.omega.y == doctest::Approx(ref.w2).epsilon(tol));
}

}  // namespace

TEST_CASE("metric_from_5 zero and identity cases") {
    ParamHyper h;
    const RandersParams zero = metric_from_5(RawParams5{}, h);
    CHECK(zero.m.m11 == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(zero.m.m12 == 0.0);
    CHECK(zero.m.m22 == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(zero.omega.x == 0.0);
    CHECK(zero.omega.y == 0.0);

    const RandersParams unit = metric_from_5(RawParams5{1, 0, 1, 0, 0}, h);
    CHECK(unit.m.m11 == doctest::Approx(1.0201).epsilon(1e-12));
    CHECK(unit.m.m22 == doctest::Approx(1.0201).epsilon(1e-12));
}

TEST_CASE("metric_from_5 drift saturation follows the reference") {
    ParamHyper h;
    h.eps_omega = 0.1;
    const RandersParams got = metric_from_5(RawParams5{1, 0.5, 1, 10, 0}, h);
    const auto ref = oracles::ref_metric_from_5(1, 0.5, 1, 10, 0, h.eps_l, h.eps_omega, h.eps);
    check_against_ref(got, ref);
    // A large raw drift saturates the sigmoid toward the 1 - eps_omega cap.
    const double norm = omega_dual_norm(got.m, got.omega);
    CHECK(norm > 0.89);
    CHECK(norm < 0.90);
}

TEST_CASE("metric_from_6 matches the reference transcription") {
    ParamHyper h;
    // Near-orthonormal frame: M close to (1 + eps_l) I.
    const RandersParams a = metric_from_6(RawParams6{1, 0, 1, 1, 0, 0}, h);
    CHECK(a.m.m11 == doctest::Approx(1.01).epsilon(1e-5));
    CHECK(a.m.m22 == doctest::Approx(1.01).epsilon(1e-5));
    CHECK(std::abs(a.m.m12) < 1e-5);

    // Degenerate direction input: the eps shift points the frame at (1,1)/sqrt(2).
    const RandersParams b = metric_from_6(RawParams6{0, 0, 3, 0, 0, 0}, h);
    const auto ref_b = oracles::ref_metric_from_6(0, 0, 3, 0, 0, 0, h.eps_l, h.eps_omega, h.eps);
    check_against_ref(b, ref_b);
    double hi, lo, ex, ey;
    oracles::ref_eigen(oracles::Mat2::from_sym(b.m), hi, lo, ex, ey);
    CHECK(hi / lo == doctest::Approx(3.01 / 0.01).epsilon(1e-9));
    CHECK(std::abs(ex) == doctest::Approx(std::abs(ey)).epsilon(1e-9));  // (1,1)/sqrt(2)
    CHECK(std::abs(ex) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));

    // +y first eigendirection.
    const RandersParams c = metric_from_6(RawParams6{0, 1, 4, 1, 0, 0}, h);
    const auto ref_c = oracles::ref_metric_from_6(0, 1, 4, 1, 0, 0, h.eps_l, h.eps_omega, h.eps);
    check_against_ref(c, ref_c);
    CHECK(c.m.m11 == doctest::Approx(1.01).epsilon(1e-5));
    CHECK(c.m.m22 == doctest::Approx(4.01).epsilon(1e-5));
}

TEST_CASE("metric_from_7 matches the reference transcription") {
    ParamHyper h;
    // All-zero raw: sigmoids at 1/2, scale midpoint 0.8; the eps-normalized
    // frame shrinks the spectrum by (sqrt(2)/(1+sqrt(2)))^2.
    const RandersParams zero = metric_from_7(RawParams7{}, h);
    const auto ref_zero =
        oracles::ref_metric_from_7(0, 0, 0, 0, 0, 0, 0, h.eps_omega, h.eps, h.s_min, h.s_max);
    check_against_ref(zero, ref_zero);
    const double shrink = std::sqrt(2.0) / (std::sqrt(2.0) + 1.0);
    CHECK(zero.m.m11 == doctest::Approx(0.8 * shrink * shrink).epsilon(1e-9));
    CHECK(zero.m.m11 == doctest::Approx(zero.m.m22).epsilon(1e-12));
    CHECK(std::abs(zero.m.m12) < 1e-15);

    // Saturated scale clamps to s_max.
    CHECK(eigen_scale_from_raw(50.0, h) == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(eigen_scale_from_raw(-50.0, h) == doctest::Approx(0.1).epsilon(1e-6));

    // One near-saturated, one near-floored eigenvalue.
    const RandersParams c = metric_from_7(RawParams7{1, 0, 50, -50, 0, 0, 0}, h);
    const auto ref_c =
        oracles::ref_metric_from_7(1, 0, 50, -50, 0, 0, 0, h.eps_omega, h.eps, h.s_min, h.s_max);
    check_against_ref(c, ref_c, 1e-9);
    double hi, lo, ex, ey;
    oracles::ref_eigen(oracles::Mat2::from_sym(c.m), hi, lo, ex, ey);
    CHECK(hi == doctest::Approx(2.0 * stable_sigmoid(50.0) * 0.8).epsilon(1e-5));
    CHECK(lo < 1e-7);
    CHECK(lo > 0.0);
}

TEST_CASE("constrain_omega behavior") {
    ParamHyper h;
    h.eps_omega = 0.1;
    const Sym2 eye = Sym2::identity();
    const Vec2 zero = constrain_omega(Vec2{0, 0}, eye, h);
    CHECK(zero.x == 0.0);
    CHECK(zero.y == 0.0);

    ParamHyper sym = h;
    sym.eps_omega = 1.0;
    const Vec2 off = constrain_omega(Vec2{3.7, -2.2}, eye, sym);
    CHECK(off.x == 0.0);
    CHECK(off.y == 0.0);

    const Vec2 sat = constrain_omega(Vec2{100, 0}, eye, h);
    CHECK(sat.x == doctest::Approx(0.9).epsilon(1e-4));
    CHECK(std::abs(sat.y) < 1e-12);
}

TEST_CASE("hyperparameter validation") {
    ParamHyper bad;
    bad.eps_omega = 0.0;
    CHECK_THROWS(metric_from_5(RawParams5{}, bad));
    bad = ParamHyper{};
    bad.s_min = 2.0;  // > s_max
    CHECK_THROWS(metric_from_7(RawParams7{}, bad));
    bad = ParamHyper{};
    bad.eps_l = 0.0;
    CHECK_THROWS(metric_from_5(RawParams5{}, bad));
}

TEST_CASE("parameterizations agree with the reference on random inputs") {
    ParamHyper h;
    h.eps_omega = 0.25;
    Rng rng(314);
    for (int i = 0; i < 500; ++i) {
        const double v[7] = {rng.normal() * 2, rng.normal() * 2, rng.normal() * 2,
                             rng.normal() * 2, rng.normal() * 2, rng.normal() * 2,
                             rng.normal() * 2};
        check_against_ref(metric_from_5(RawParams5{v[0], v[1], v[2], v[3], v[4]}, h),
                          oracles::ref_metric_from_5(v[0], v[1], v[2], v[3], v[4], h.eps_l,
                                                     h.eps_omega, h.eps),
                          1e-11);
        check_against_ref(metric_from_6(RawParams6{v[0], v[1], v[2], v[3], v[4], v[5]}, h),
                          oracles::ref_metric_from_6(v[0], v[1], v[2], v[3], v[4], v[5], h.eps_l,
                                                     h.eps_omega, h.eps),
                          1e-11);
        check_against_ref(
            metric_from_7(RawParams7{v[0], v[1], v[2], v[3], v[4], v[5], v[6]}, h),
            oracles::ref_metric_from_7(v[0], v[1], v[2], v[3], v[4], v[5], v[6], h.eps_omega,
                                       h.eps, h.s_min, h.s_max),
            1e-11);
    }
}
