#include "finslerconv/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace finslerconv {

namespace {

void require_odd(int k) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("kernel size must be odd and positive");
}

}  // namespace

KernelSupport reference_grid(int k) {
    require_odd(k);
    KernelSupport s;
    s.k = k;
    s.offsets.reserve(static_cast<std::size_t>(k) * k);
    const int half = (k - 1) / 2;
    for (int i = -half; i <= half; ++i) {
        for (int j = -half; j <= half; ++j) {
            s.offsets.push_back(Vec2{static_cast<double>(j), static_cast<double>(i)});
        }
    }
    return s;
}

KernelSupport dilate(const KernelSupport& support, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("dilate: factor must be positive");
    KernelSupport out = support;
    for (auto& o : out.offsets) o = o * s;
    return out;
}

KernelSupport shift(const KernelSupport& support, const Vec2& delta) {
    KernelSupport out = support;
    for (auto& o : out.offsets) o += delta;
    return out;
}

KernelSupport deform(const KernelSupport& support, const std::vector<Vec2>& per_cell_offsets) {
    if (per_cell_offsets.size() != support.offsets.size())
        throw std::invalid_argument("deform: offset count mismatch");
    KernelSupport out = support;
    for (std::size_t i = 0; i < out.offsets.size(); ++i) out.offsets[i] += per_cell_offsets[i];
    return out;
}

std::vector<PolarSample> polar_samples(const PolarScheme& scheme) {
    require_odd(scheme.k);
    const int k = scheme.k;
    std::vector<PolarSample> samples;
    samples.reserve(static_cast<std::size_t>(k) * k);

    if (scheme.variant == PolarVariant::Grid) {
        for (int i = 0; i < k; ++i) {
            const double s = (k == 1) ? 0.0 : static_cast<double>(i) / (k - 1);
            for (int j = 0; j < k; ++j) {
                samples.push_back(PolarSample{s, 2.0 * M_PI * j / k});
            }
        }
    } else {
        const int layers = (k - 1) / 2;
        samples.push_back(PolarSample{0.0, 0.0});
        for (int layer = 1; layer <= layers; ++layer) {
            const double s = static_cast<double>(layer) / layers;
            const int angles = 8 * layer;
            for (int a = 0; a < angles; ++a) {
                samples.push_back(PolarSample{s, 2.0 * M_PI * a / angles});
            }
        }
    }
    return samples;
}

KernelSupport utb_support(const RandersParams& p, const std::vector<PolarSample>& samples, int k) {
    KernelSupport out;
    out.k = k;
    out.offsets.reserve(samples.size());
    for (const PolarSample& ps : samples) {
        out.offsets.push_back(unit_circle_point(p, ps.theta) * ps.s);
    }
    return out;
}

KernelSupport utb_support(const RandersParams& p, const PolarScheme& scheme) {
    return utb_support(p, polar_samples(scheme), scheme.k);
}

}  // namespace finslerconv
