#pragma once

#include <vector>

#include "finslerconv/conv.hpp"
#include "finslerconv/image.hpp"
#include "finslerconv/randers.hpp"
#include "finslerconv/sampling.hpp"

namespace finslerconv {

struct UgbConfig {
    double dt = 0.01;
    double t_end = 0.1;
    double s0 = 2.0;         // initial stencil scale
    int kernel_radius = 0;   // stamp truncation radius in pixels; 0 = auto
    int pixel_budget = 128 * 128;
    bool allow_large = false;
};

// Default stamp truncation: ceil(3 sqrt(2 t_end) sqrt(lambda_max(M*))) over
// the field, floored at 2 px.
int auto_kernel_radius(const MetricField& dual_field, double t_end);

// Discrete Finsler-Gauss stamp h(y) ~ exp(-F*(y)^2 / (4t)) over the
// (2*radius+1)^2 neighborhood, normalized so the entries sum to 1 (the
// continuum normalizer is replaced by the discrete sum). Row-major in
// (dy, dx), dy and dx in [-radius, radius].
std::vector<double> finsler_gauss_kernel(const RandersParams& dual, double t, int radius);

// Heat from a one-hot Dirac at (r, c), diffused round(t_end/dt) steps with
// per-step time dt; each pixel gathers through its own stamp:
//   next(x') = sum_y cur(x'+y) h_{x'}(y).
GrayImage diffuse_dirac(int r, int c, const MetricField& dual_stamps_field, const UgbConfig& cfg,
                        PaddingMode pad);

// Unit-speed geodesic flow directions -grad/|grad| of a diffused Dirac, zero
// where the gradient vanishes.
VecField flow_field(const GrayImage& diffused, PaddingMode pad);

// Stencil s0 * s * y(theta; dual) advected along the negated normalized
// Sobel gradient of the diffused image (bilinear lookup of the gradient,
// normalized after interpolation) with explicit steps of size dt for total
// time t_end. Points in zero-gradient regions stall. Returns offsets
// relative to (r, c).
KernelSupport flow_stencil(int r, int c, const RandersParams& dual, const GrayImage& diffused,
                           const UgbConfig& cfg, const PolarScheme& scheme, PaddingMode pad);

// Unit-geodesic-ball convolution: per pixel, dualize the field, diffuse a
// Dirac, flow the stencil, and average at the flowed offsets. Proof of
// concept; refuses images above cfg.pixel_budget unless allow_large is set.
GrayImage ugb_convolve(const GrayImage& img, const KernelWeights& weights,
                       const MetricField& field, const UgbConfig& cfg, const PolarScheme& scheme,
                       PaddingMode pad);

}  // namespace finslerconv
