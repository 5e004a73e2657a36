#include <doctest.h>

#include <cmath>

#include "finslerconv/conv.hpp"
#include "finslerconv/heuristic.hpp"
#include "finslerconv/metric_params.hpp"
#include "finslerconv/phantom.hpp"
#include "finslerconv/rng.hpp"
#include "finslerconv/train.hpp"
#include "oracles.hpp"

using namespace finslerconv;

TEST_CASE("convolution identities") {
    const GrayImage flat(10, 12, 0.63);
    const KernelWeights w = KernelWeights::uniform(3);
    const GrayImage out = convolve(flat, w, reference_grid(3), PaddingMode::Replicate);
    for (double v : out.data()) CHECK(v == doctest::Approx(0.63).epsilon(1e-14));

    Rng rng(21);
    GrayImage img(9, 9);
    for (auto& v : img.data()) v = rng.uniform01();
    const GrayImage id =
        convolve(img, KernelWeights::one_hot_center(3), reference_grid(3), PaddingMode::Zero);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(id.data()[i] == img.data()[i]);
}

TEST_CASE("integer-grid convolution equals the plain box filter") {
    const GrayImage clean = make_phantom(48, 48);
    const GrayImage noisy = add_gaussian_noise(clean, 0.3, 4);
    const KernelWeights w = KernelWeights::uniform(11);
    const GrayImage box = convolve(noisy, w, reference_grid(11), PaddingMode::Replicate);
    const GrayImage ref = oracles::ref_box_filter(noisy, 11);
    for (std::size_t i = 0; i < box.size(); ++i)
        CHECK(box.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
    CHECK(psnr(box, clean) > psnr(noisy, clean));  // smoothing pays at this noise level
}

TEST_CASE("metric convolution with a constant field equals a fixed support") {
    Rng rng(33);
    GrayImage img(14, 11);
    for (auto& v : img.data()) v = rng.uniform01();
    const KernelWeights w = KernelWeights::uniform(3);
    const PolarScheme scheme{PolarVariant::OnionPeel, 3};

    // Unit Euclidean metric: nine-point circular support built by hand.
    const RandersParams unit = RandersParams::riemann(Sym2::identity());
    MetricField field(img.height(), img.width());
    for (auto& p : field.params) p = unit;
    const GrayImage metric_out =
        metric_utb_convolve(img, w, field, scheme, PaddingMode::Replicate);

    KernelSupport manual;
    manual.k = 3;
    manual.offsets.push_back(Vec2{0, 0});
    for (int a = 0; a < 8; ++a)
        manual.offsets.push_back(Vec2{std::cos(2 * M_PI * a / 8), std::sin(2 * M_PI * a / 8)});
    const GrayImage fixed_out = convolve(img, w, manual, PaddingMode::Replicate);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(metric_out.data()[i] == doctest::Approx(fixed_out.data()[i]).epsilon(1e-12));

    // Constant image stays constant under any valid field.
    const GrayImage flat(12, 12, 0.4);
    MetricField f2(12, 12);
    Rng prng(8);
    for (auto& p : f2.params) p = oracles::random_params(prng, 50.0, 0.7);
    const GrayImage flat_out = metric_utb_convolve(flat, KernelWeights::uniform(5), f2,
                                                   PolarScheme{PolarVariant::Grid, 5},
                                                   PaddingMode::Periodic);
    for (double v : flat_out.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-13));
}

TEST_CASE("edge-aware field keeps a step edge sharper than a box filter") {
    // Clean vertical step: left half 0, right half 1.
    GrayImage step(32, 32, 0.0);
    for (int r = 0; r < 32; ++r)
        for (int c = 16; c < 32; ++c) step.at(r, c) = 1.0;

    HeuristicConfig hc;  // iota 0.1, alpha 100
    const MetricField field = heuristic_field(step, hc);
    const GrayImage metric_out = metric_utb_convolve(
        step, KernelWeights::uniform(3), field, PolarScheme{PolarVariant::Grid, 3},
        PaddingMode::Replicate);
    const GrayImage box_out =
        convolve(step, KernelWeights::uniform(3), reference_grid(3), PaddingMode::Replicate);

    auto intermediate = [](const GrayImage& img) {
        int n = 0;
        for (double v : img.data())
            if (v > 0.1 && v < 0.9) ++n;
        return n;
    };
    CHECK(intermediate(metric_out) < intermediate(box_out));
}

TEST_CASE("intermediate head channels and initialization") {
    const std::vector<KernelWeights> head = utb_head_init(5);
    REQUIRE(head.size() == 5);
    for (int ch = 0; ch < 5; ++ch) {
        const double want = (ch == 0 || ch == 2) ? 1.0 / 25.0 : 1e-6;
        for (double v : head[ch].weights) CHECK(v == want);
    }

    // All-zero head weights give the all-zero raw parameter planes, and an
    // all-zero 7-number field is the isotropic midpoint metric everywhere.
    std::vector<KernelWeights> zero_head(7);
    for (auto& hw : zero_head) {
        hw.k = 3;
        hw.weights.assign(9, 0.0);
    }
    const GrayImage img = make_phantom(16, 16);
    const auto raw = intermediate_head(img, zero_head, PaddingMode::Replicate);
    REQUIRE(raw.size() == 7);
    for (const auto& plane : raw)
        for (double v : plane.data()) CHECK(v == 0.0);
    ParamHyper h;
    const auto ref =
        oracles::ref_metric_from_7(0, 0, 0, 0, 0, 0, 0, h.eps_omega, h.eps, h.s_min, h.s_max);
    const double rawvals[7] = {0, 0, 0, 0, 0, 0, 0};
    const RandersParams p = params_from_raw(rawvals, ParamPath::Spectral7, h);
    CHECK(p.m.m11 == doctest::Approx(ref.m.a).epsilon(1e-12));
    CHECK(p.m.m22 == doctest::Approx(ref.m.d).epsilon(1e-12));

    // A zero-offset head reduces deformable sampling to the standard grid.
    const int k = 3;
    RawField offsets(img.height(), img.width(), 2 * k * k);
    const GrayImage deform =
        deformable_forward(img, KernelWeights::uniform(k), offsets, PaddingMode::Replicate);
    const GrayImage standard =
        convolve(img, KernelWeights::uniform(k), reference_grid(k), PaddingMode::Replicate);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(deform.data()[i] == doctest::Approx(standard.data()[i]).epsilon(1e-14));

    CHECK_THROWS(intermediate_head(img, {}, PaddingMode::Zero));
}

TEST_CASE("shape validation") {
    const GrayImage img(8, 8, 0.1);
    KernelWeights bad{3, std::vector<double>(5, 0.1)};
    CHECK_THROWS(convolve(img, bad, reference_grid(3), PaddingMode::Zero));
    MetricField small(4, 4);
    for (auto& p : small.params) p = RandersParams::riemann(Sym2::identity());
    CHECK_THROWS(metric_utb_convolve(img, KernelWeights::uniform(3), small,
                                     PolarScheme{PolarVariant::Grid, 3}, PaddingMode::Zero));
}
