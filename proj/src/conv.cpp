#include "finslerconv/conv.hpp"

#include <cmath>
#include <stdexcept>

#include "finslerconv/parallel.hpp"

namespace finslerconv {

KernelWeights KernelWeights::uniform(int k) {
    KernelWeights w;
    w.k = k;
    w.weights.assign(static_cast<std::size_t>(k) * k, 1.0 / (static_cast<double>(k) * k));
    return w;
}

KernelWeights KernelWeights::one_hot_center(int k) {
    KernelWeights w;
    w.k = k;
    w.weights.assign(static_cast<std::size_t>(k) * k, 0.0);
    w.weights[w.weights.size() / 2] = 1.0;
    return w;
}

namespace {

void check_weights(const KernelWeights& w) {
    if (w.k < 1 || w.weights.size() != static_cast<std::size_t>(w.k) * w.k)
        throw std::invalid_argument("KernelWeights: length must be k^2");
    for (double v : w.weights)
        if (!std::isfinite(v)) throw std::invalid_argument("KernelWeights: non-finite weight");
}

}  // namespace

GrayImage convolve(const GrayImage& img, const KernelWeights& weights,
                   const KernelSupport& support, PaddingMode pad) {
    check_weights(weights);
    if (support.offsets.size() != weights.weights.size())
        throw std::invalid_argument("convolve: support/weights size mismatch");
    GrayImage out(img.height(), img.width());
    const std::size_t n = weights.weights.size();
    parallel_rows(img.height(), [&](int r) {
        for (int c = 0; c < img.width(); ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const Vec2& o = support.offsets[j];
                acc += weights.weights[j] * sample_bilinear(img, r + o.y, c + o.x, pad);
            }
            out.at(r, c) = acc;
        }
    });
    return out;
}

GrayImage convolve(const GrayImage& img, const KernelWeights& weights, const SupportFn& supports,
                   PaddingMode pad) {
    check_weights(weights);
    GrayImage out(img.height(), img.width());
    const std::size_t n = weights.weights.size();
    parallel_rows(img.height(), [&](int r) {
        std::vector<Vec2> offs(n);
        for (int c = 0; c < img.width(); ++c) {
            supports(r, c, offs.data());
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += weights.weights[j] * sample_bilinear(img, r + offs[j].y, c + offs[j].x, pad);
            }
            out.at(r, c) = acc;
        }
    });
    return out;
}

GrayImage deformable_convolve(const GrayImage& img, const KernelWeights& weights,
                              const OffsetField& field, PaddingMode pad) {
    check_weights(weights);
    if (field.height != img.height() || field.width != img.width() || field.k != weights.k)
        throw std::invalid_argument("deformable_convolve: field shape mismatch");
    const KernelSupport ref = reference_grid(weights.k);
    const std::size_t n = weights.weights.size();
    GrayImage out(img.height(), img.width());
    parallel_rows(img.height(), [&](int r) {
        for (int c = 0; c < img.width(); ++c) {
            const Vec2* delta = field.at(r, c);
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const Vec2 o = ref.offsets[j] + delta[j];
                acc += weights.weights[j] * sample_bilinear(img, r + o.y, c + o.x, pad);
            }
            out.at(r, c) = acc;
        }
    });
    return out;
}

GrayImage metric_utb_convolve(const GrayImage& img, const KernelWeights& weights,
                              const MetricField& field, const PolarScheme& scheme,
                              PaddingMode pad) {
    check_weights(weights);
    if (field.height != img.height() || field.width != img.width())
        throw std::invalid_argument("metric_utb_convolve: field shape mismatch");
    if (scheme.k != weights.k)
        throw std::invalid_argument("metric_utb_convolve: scheme/weights k mismatch");
    const std::vector<PolarSample> samples = polar_samples(scheme);
    const std::size_t n = samples.size();
    GrayImage out(img.height(), img.width());
    parallel_rows(img.height(), [&](int r) {
        for (int c = 0; c < img.width(); ++c) {
            const RandersParams& p = field.at(r, c);
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const Vec2 y = unit_circle_point(p, samples[j].theta);
                const Vec2 o = y * samples[j].s;
                acc += weights.weights[j] * sample_bilinear(img, r + o.y, c + o.x, pad);
            }
            out.at(r, c) = acc;
        }
    });
    return out;
}

std::vector<GrayImage> intermediate_head(const GrayImage& img,
                                         const std::vector<KernelWeights>& head_weights,
                                         PaddingMode pad) {
    if (head_weights.empty()) throw std::invalid_argument("intermediate_head: no channels");
    const int k = head_weights.front().k;
    for (const auto& w : head_weights)
        if (w.k != k) throw std::invalid_argument("intermediate_head: inconsistent kernel sizes");
    const KernelSupport ref = reference_grid(k);
    std::vector<GrayImage> out;
    out.reserve(head_weights.size());
    for (const auto& w : head_weights) out.push_back(convolve(img, w, ref, pad));
    return out;
}

std::vector<KernelWeights> utb_head_init(int k) {
    std::vector<KernelWeights> head(5);
    const double z = 1.0 / (static_cast<double>(k) * k);
    for (int ch = 0; ch < 5; ++ch) {
        head[ch].k = k;
        const double v = (ch == 0 || ch == 2) ? z : 1e-6;
        head[ch].weights.assign(static_cast<std::size_t>(k) * k, v);
    }
    return head;
}

}  // namespace finslerconv
