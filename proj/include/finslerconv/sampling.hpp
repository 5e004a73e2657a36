#pragma once

#include <vector>

#include "finslerconv/randers.hpp"
#include "finslerconv/vec2.hpp"

namespace finslerconv {

// k*k kernel sample offsets in pixel units, in a fixed deterministic order
// (weight sharing pairs weight j with offset j at every pixel).
struct KernelSupport {
    int k{0};
    std::vector<Vec2> offsets;
};

enum class PolarVariant { Grid, OnionPeel };

struct PolarScheme {
    PolarVariant variant{PolarVariant::Grid};
    int k{3};
};

struct PolarSample {
    double s;      // radius fraction in [0,1]
    double theta;  // angle from the +x (column) axis
};

// Square k x k grid of integer offsets, row-major; k odd.
KernelSupport reference_grid(int k);

// Elementwise transforms of a support; order preserved.
KernelSupport dilate(const KernelSupport& support, double s);
KernelSupport shift(const KernelSupport& support, const Vec2& delta);
KernelSupport deform(const KernelSupport& support, const std::vector<Vec2>& per_cell_offsets);

// k^2 polar samples. Grid: k radii x k angles (angles on the half-open
// [0,2pi), radii include both 0 and 1). OnionPeel: layer 0 contributes the
// origin once; layer k' >= 1 contributes radius k'/floor((k-1)/2) at 8k'
// uniform angles. Ordered by (layer, angle).
std::vector<PolarSample> polar_samples(const PolarScheme& scheme);

// Unit-tangent-ball support: offset_j = s_j * unit_circle_point(p, theta_j).
KernelSupport utb_support(const RandersParams& p, const PolarScheme& scheme);
KernelSupport utb_support(const RandersParams& p, const std::vector<PolarSample>& samples, int k);

}  // namespace finslerconv
