#pragma once

#include <functional>
#include <vector>

#include "finslerconv/image.hpp"
#include "finslerconv/randers.hpp"
#include "finslerconv/sampling.hpp"

namespace finslerconv {

// Shared kernel weights, paired with support offsets by index.
struct KernelWeights {
    int k{0};
    std::vector<double> weights;

    static KernelWeights uniform(int k);
    static KernelWeights one_hot_center(int k);  // identity kernel on a grid support
};

// Fills `out` (k^2 entries) with the support offsets for pixel (r, c).
using SupportFn = std::function<void(int r, int c, Vec2* out)>;

// out(x) = sum_j weights[j] * f(x + offset_j), bilinear sampling, same shape.
// Pure gather: results do not depend on evaluation order.
GrayImage convolve(const GrayImage& img, const KernelWeights& weights,
                   const KernelSupport& support, PaddingMode pad);
GrayImage convolve(const GrayImage& img, const KernelWeights& weights, const SupportFn& supports,
                   PaddingMode pad);

// Per-pixel offsets for the deformable baseline, laid out as k^2 cells per pixel.
struct OffsetField {
    int height{0};
    int width{0};
    int k{0};
    std::vector<Vec2> offsets;  // (r*W + c) * k^2 + cell

    OffsetField() = default;
    OffsetField(int h, int w, int k_)
        : height(h), width(w), k(k_),
          offsets(static_cast<std::size_t>(h) * w * k_ * k_) {}
    const Vec2* at(int r, int c) const {
        return offsets.data() + (static_cast<std::size_t>(r) * width + c) * k * k;
    }
    Vec2* at(int r, int c) {
        return offsets.data() + (static_cast<std::size_t>(r) * width + c) * k * k;
    }
};

// Reference grid deformed per pixel and per cell.
GrayImage deformable_convolve(const GrayImage& img, const KernelWeights& weights,
                              const OffsetField& field, PaddingMode pad);

// Metric convolution over unit tangent balls of a per-pixel Randers field.
// Equivalent to convolve with per-pixel supports utb_support(field(x), scheme);
// the polar quadrature weight is absorbed into the (shared) kernel weights.
GrayImage metric_utb_convolve(const GrayImage& img, const KernelWeights& weights,
                              const MetricField& field, const PolarScheme& scheme,
                              PaddingMode pad);

// One standard k x k convolution per head channel; per-pixel raw parameter
// vectors for the metric paths (5/6/7 channels) or offsets (2k^2 channels).
std::vector<GrayImage> intermediate_head(const GrayImage& img,
                                         const std::vector<KernelWeights>& head_weights,
                                         PaddingMode pad);

// Head initialization for the 5-channel metric head: channels l11 and l22
// uniform at 1/k^2 (single input channel), the rest uniform at 1e-6.
std::vector<KernelWeights> utb_head_init(int k);

}  // namespace finslerconv
