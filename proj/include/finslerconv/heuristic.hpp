#pragma once

#include "finslerconv/image.hpp"
#include "finslerconv/randers.hpp"

namespace finslerconv {

// With M ~ iota*I the unit-ball radius is 1/sqrt(iota) under Sqrt (the
// eigenvalues are used as written) and 1/iota under Linear (squared).
enum class RadiusConvention { Sqrt, Linear };

// Direction given to the raw drift: the gradient itself or its orthogonal.
enum class OmegaDir { Grad, GradPerp };

struct HeuristicConfig {
    double iota = 0.1;    // average metric scale
    double alpha = 100.0; // anisotropy gain
    double eps_omega = 1.0;
    double eps = 1e-6;
    RadiusConvention radius_convention = RadiusConvention::Sqrt;
    OmegaDir omega_dir = OmegaDir::Grad;
    PaddingMode pad = PaddingMode::Replicate;
};

// Edge-aligned anisotropic field from Sobel gradients:
//   t = 1 + alpha * |grad f| / max |grad f|
//   M = R(theta) diag(iota*t, iota/t) R(theta)', theta = gradient angle,
//   omega = (1 - eps_omega) * wtilde / (||wtilde||_{M^-1} + eps),
//   wtilde = grad f / (|grad f| + eps)  (or its orthogonal).
// The larger eigenvalue sits along the gradient, so the unit ball stretches
// along the edge. Zero-gradient pixels get the isotropic iota scale.
MetricField heuristic_field(const GrayImage& img, const HeuristicConfig& cfg);

// Same construction with the geodesic-ball defaults alpha=10, iota=1.
MetricField heuristic_field_ugb(const GrayImage& img, HeuristicConfig cfg = HeuristicConfig{});

}  // namespace finslerconv
