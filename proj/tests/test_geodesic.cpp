#include <doctest.h>

#include <cmath>

#include "finslerconv/geodesic.hpp"
#include "finslerconv/heuristic.hpp"
#include "finslerconv/phantom.hpp"
#include "finslerconv/rng.hpp"
#include "oracles.hpp"

using namespace finslerconv;

namespace {

MetricField isotropic_field(int h, int w, double scale = 1.0) {
    MetricField f(h, w);
    for (auto& p : f.params) p = RandersParams::riemann(Sym2::diag(scale, scale));
    return f;
}

}  // namespace

TEST_CASE("finsler_gauss_kernel shape and normalization") {
    const RandersParams iso = RandersParams::riemann(Sym2::identity());
    const auto stamp = finsler_gauss_kernel(iso, 0.01, 2);
    REQUIRE(stamp.size() == 25);
    double sum = 0.0;
    for (double v : stamp) {
        CHECK(v > 0.0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // 4-fold symmetry of the isotropic stamp.
    auto at = [&](int dy, int dx) { return stamp[(dy + 2) * 5 + (dx + 2)]; };
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
            CHECK(at(dy, dx) == doctest::Approx(at(-dy, dx)).epsilon(1e-12));
            CHECK(at(dy, dx) == doctest::Approx(at(dy, -dx)).epsilon(1e-12));
            CHECK(at(dy, dx) == doctest::Approx(at(dx, dy)).epsilon(1e-12));
        }

    // Random duals still normalize to one.
    Rng rng(77);
    for (int i = 0; i < 20; ++i) {
        const auto s = finsler_gauss_kernel(oracles::random_params(rng, 30.0, 0.6), 0.02, 3);
        double total = 0.0;
        for (double v : s) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }

    // Drift skews the mass; flipping the drift flips the skew.
    const RandersParams right = RandersParams::make(Sym2::identity(), Vec2{-0.5, 0.0});
    const RandersParams left = RandersParams::make(Sym2::identity(), Vec2{0.5, 0.0});
    const auto sr = finsler_gauss_kernel(right, 0.05, 3);
    const auto sl = finsler_gauss_kernel(left, 0.05, 3);
    auto half_balance = [](const std::vector<double>& s, int radius) {
        const int side = 2 * radius + 1;
        double pos = 0.0, neg = 0.0;
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                const double v = s[(dy + radius) * side + (dx + radius)];
                if (dx > 0) pos += v;
                if (dx < 0) neg += v;
            }
        return pos - neg;
    };
    // F*(y) smaller where the drift term is negative -> more mass there.
    CHECK(half_balance(sr, 3) > 0.01);
    CHECK(half_balance(sl, 3) < -0.01);
    CHECK(half_balance(sr, 3) == doctest::Approx(-half_balance(sl, 3)).epsilon(1e-12));

    CHECK_THROWS(finsler_gauss_kernel(iso, 0.0, 2));
    CHECK_THROWS(finsler_gauss_kernel(iso, 0.1, 0));
}

TEST_CASE("dirac diffusion conserves mass and stays symmetric") {
    const MetricField duals = isotropic_field(64, 64);
    UgbConfig cfg;  // dt 0.01, t_end 0.1
    const GrayImage heat = diffuse_dirac(32, 32, duals, cfg, PaddingMode::Periodic);
    double total = 0.0;
    for (double v : heat.data()) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);

    // Radial symmetry across the 8-fold orbit of a few probe offsets.
    for (const auto& [dr, dc] : std::vector<std::pair<int, int>>{{1, 0}, {2, 1}, {3, 2}}) {
        const double ref = heat.at(32 + dr, 32 + dc);
        for (const auto& [r, c] : std::vector<std::pair<int, int>>{{32 + dr, 32 - dc},
                                                                   {32 - dr, 32 + dc},
                                                                   {32 - dr, 32 - dc},
                                                                   {32 + dc, 32 + dr},
                                                                   {32 - dc, 32 + dr},
                                                                   {32 + dc, 32 - dr},
                                                                   {32 - dc, 32 - dr}}) {
            CHECK(heat.at(r, c) == doctest::Approx(ref).epsilon(0.01));
        }
    }

    // One step equals a single stamp placement.
    UgbConfig one;
    one.dt = 0.1;
    one.t_end = 0.1;
    one.kernel_radius = 3;
    const GrayImage single = diffuse_dirac(32, 32, duals, one, PaddingMode::Periodic);
    const auto stamp = finsler_gauss_kernel(duals.at(32, 32), 0.1, 3);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            CHECK(single.at(32 + dy, 32 + dx) ==
                  doctest::Approx(stamp[(dy + 3) * 7 + (dx + 3)]).epsilon(1e-12));

    CHECK_THROWS(diffuse_dirac(70, 2, duals, cfg, PaddingMode::Periodic));
}

TEST_CASE("flow field is unit length or zero") {
    const MetricField duals = isotropic_field(32, 32);
    UgbConfig cfg;
    const GrayImage heat = diffuse_dirac(16, 16, duals, cfg, PaddingMode::Periodic);
    const VecField flow = flow_field(heat, PaddingMode::Periodic);
    int zero = 0, unit = 0;
    for (const Vec2& v : flow.v) {
        const double n = v.norm();
        if (n == 0.0) {
            ++zero;
        } else {
            CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
            ++unit;
        }
    }
    CHECK(unit > 0);
    CHECK(zero + unit == 32 * 32);
}

TEST_CASE("stencil flow basics") {
    const MetricField field = isotropic_field(64, 64);
    const MetricField duals = dual_field(field);
    UgbConfig cfg;  // s0 = 2
    const PolarScheme scheme{PolarVariant::Grid, 5};

    // t_end = 0: the unflowed s0-scaled unit-ball samples come back.
    UgbConfig frozen = cfg;
    frozen.t_end = 0.0;
    const GrayImage dummy(3, 3, 0.0);
    const KernelSupport raw =
        flow_stencil(32, 32, duals.at(32, 32), dummy, frozen, scheme, PaddingMode::Periodic);
    const auto samples = polar_samples(scheme);
    for (std::size_t j = 0; j < samples.size(); ++j)
        CHECK(raw.offsets[j].norm() ==
              doctest::Approx(2.0 * samples[j].s).epsilon(1e-12));

    // Flowing moves points outward from the heat source.
    const GrayImage heat = diffuse_dirac(32, 32, duals, cfg, PaddingMode::Periodic);
    const KernelSupport flowed =
        flow_stencil(32, 32, duals.at(32, 32), heat, cfg, scheme, PaddingMode::Periodic);
    double mean_before = 0.0, mean_after = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        mean_before += raw.offsets[j].norm();
        mean_after += flowed.offsets[j].norm();
    }
    CHECK(mean_after >= mean_before);

    // Outer-ring isotropy of the flowed stencil.
    double rmin = 1e300, rmax = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (samples[j].s == 1.0) {
            rmin = std::min(rmin, flowed.offsets[j].norm());
            rmax = std::max(rmax, flowed.offsets[j].norm());
        }
    }
    CHECK(rmax / rmin < 1.1);
}

TEST_CASE("ugb convolution basics") {
    const GrayImage flat(48, 48, 0.77);
    const MetricField field = isotropic_field(48, 48);
    UgbConfig cfg;
    const PolarScheme scheme{PolarVariant::Grid, 3};
    const GrayImage out =
        ugb_convolve(flat, KernelWeights::uniform(3), field, cfg, scheme, PaddingMode::Periodic);
    for (double v : out.data()) CHECK(v == doctest::Approx(0.77).epsilon(1e-12));

    // Budget guard.
    const GrayImage big(129, 129, 0.0);
    const MetricField bigf = isotropic_field(129, 129);
    CHECK_THROWS(
        ugb_convolve(big, KernelWeights::uniform(3), bigf, cfg, scheme, PaddingMode::Periodic));
    UgbConfig allowed = cfg;
    allowed.allow_large = true;
    allowed.t_end = 0.0;  // cheap path, only the guard is under test
    CHECK_NOTHROW(
        ugb_convolve(big, KernelWeights::uniform(3), bigf, allowed, scheme, PaddingMode::Periodic));

    // Totality on random fields.
    Rng rng(55);
    GrayImage img(16, 16);
    for (auto& v : img.data()) v = rng.uniform01();
    for (int trial = 0; trial < 10; ++trial) {
        MetricField f(16, 16);
        for (auto& p : f.params) p = oracles::random_params(rng, 16.0, 0.5);
        const GrayImage o =
            ugb_convolve(img, KernelWeights::uniform(3), f, cfg, scheme, PaddingMode::Replicate);
        for (double v : o.data()) CHECK(std::isfinite(v));
    }
}

TEST_CASE("ugb with zero flow time reproduces the dual-ball tangent conv") {
    const GrayImage img = make_phantom(32, 32);
    HeuristicConfig hc;
    hc.alpha = 5.0;
    hc.iota = 1.0;
    hc.eps_omega = 0.5;
    const MetricField field = heuristic_field(img, hc);
    UgbConfig cfg;
    cfg.t_end = 0.0;
    cfg.s0 = 1.0;
    const PolarScheme scheme{PolarVariant::Grid, 5};
    const KernelWeights w = KernelWeights::uniform(5);
    const GrayImage a = ugb_convolve(img, w, field, cfg, scheme, PaddingMode::Replicate);
    const GrayImage b =
        metric_utb_convolve(img, w, dual_field(field), scheme, PaddingMode::Replicate);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-9);
}

TEST_CASE("ugb denoising beats the box filter on a structured crop") {
    // Top-left 64x64 of the phantom: striped block plus smooth background.
    const GrayImage full = make_phantom(256, 256);
    GrayImage crop(64, 64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) crop.at(r, c) = full.at(r, c);
    const GrayImage noisy = add_gaussian_noise(crop, 0.3, 2);

    HeuristicConfig hc;
    const MetricField field = heuristic_field_ugb(noisy, hc);
    UgbConfig cfg;
    cfg.kernel_radius = 2;  // per-step spread stays below 2 px for this field
    const KernelWeights w = KernelWeights::uniform(11);
    const GrayImage ugb = ugb_convolve(noisy, w, field, cfg,
                                       PolarScheme{PolarVariant::Grid, 11},
                                       PaddingMode::Replicate);
    const GrayImage box = oracles::ref_box_filter(noisy, 11);
    CHECK(psnr(ugb, crop) >= psnr(box, crop));
}
