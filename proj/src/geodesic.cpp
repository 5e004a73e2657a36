#include "finslerconv/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "finslerconv/parallel.hpp"

namespace finslerconv {

namespace {

int diffusion_steps(const UgbConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("UgbConfig: dt must be positive");
    if (cfg.t_end < 0.0) throw std::invalid_argument("UgbConfig: t_end must be nonnegative");
    return static_cast<int>(std::llround(cfg.t_end / cfg.dt));
}

// Gradient field lookup with componentwise bilinear interpolation.
Vec2 bilinear_vec(const VecField& f, double r, double c, PaddingMode pad,
                  const GrayImage& shape_ref) {
    (void)shape_ref;
    const double rf = std::floor(r);
    const double cf = std::floor(c);
    const int r0 = static_cast<int>(rf);
    const int c0 = static_cast<int>(cf);
    const double fr = r - rf;
    const double fc = c - cf;
    auto fetch = [&](int rr, int cc) -> Vec2 {
        const int h = f.height;
        const int w = f.width;
        switch (pad) {
            case PaddingMode::Periodic: {
                int mr = rr % h;
                if (mr < 0) mr += h;
                int mc = cc % w;
                if (mc < 0) mc += w;
                return f.at(mr, mc);
            }
            case PaddingMode::Zero:
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) return Vec2{0.0, 0.0};
                return f.at(rr, cc);
            case PaddingMode::Replicate:
                return f.at(std::clamp(rr, 0, h - 1), std::clamp(cc, 0, w - 1));
        }
        return Vec2{0.0, 0.0};
    };
    const Vec2 v00 = fetch(r0, c0);
    const Vec2 v01 = fetch(r0, c0 + 1);
    const Vec2 v10 = fetch(r0 + 1, c0);
    const Vec2 v11 = fetch(r0 + 1, c0 + 1);
    const double w00 = (1.0 - fr) * (1.0 - fc);
    const double w01 = (1.0 - fr) * fc;
    const double w10 = fr * (1.0 - fc);
    const double w11 = fr * fc;
    return Vec2{w00 * v00.x + w01 * v01.x + w10 * v10.x + w11 * v11.x,
                w00 * v00.y + w01 * v01.y + w10 * v10.y + w11 * v11.y};
}

inline int resolve_index(int i, int n, PaddingMode pad) {
    if (pad == PaddingMode::Periodic) {
        int m = i % n;
        if (m < 0) m += n;
        return m;
    }
    return std::clamp(i, 0, n - 1);
}

}  // namespace

int auto_kernel_radius(const MetricField& duals, double t_end) {
    double max_eig = 0.0;
    for (const RandersParams& p : duals.params) max_eig = std::max(max_eig, p.m.max_eigenvalue());
    const int r = static_cast<int>(std::ceil(3.0 * std::sqrt(2.0 * t_end) * std::sqrt(max_eig)));
    return std::max(2, r);
}

std::vector<double> finsler_gauss_kernel(const RandersParams& dual, double t, int radius) {
    if (!(t > 0.0)) throw std::invalid_argument("finsler_gauss_kernel: t must be positive");
    if (radius < 1) throw std::invalid_argument("finsler_gauss_kernel: radius must be >= 1");
    const int side = 2 * radius + 1;
    std::vector<double> stamp(static_cast<std::size_t>(side) * side);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double fs = randers_eval(dual, Vec2{static_cast<double>(dx), static_cast<double>(dy)});
            const double v = std::exp(-fs * fs / (4.0 * t));
            stamp[static_cast<std::size_t>(dy + radius) * side + (dx + radius)] = v;
            sum += v;
        }
    }
    for (double& v : stamp) v /= sum;
    return stamp;
}

GrayImage diffuse_dirac(int r, int c, const MetricField& duals, const UgbConfig& cfg,
                        PaddingMode pad) {
    const int h = duals.height;
    const int w = duals.width;
    if (r < 0 || r >= h || c < 0 || c >= w)
        throw std::invalid_argument("diffuse_dirac: center outside image");
    const int steps = diffusion_steps(cfg);
    GrayImage cur(h, w, 0.0);
    cur.at(r, c) = 1.0;
    if (steps == 0) return cur;

    const int radius =
        cfg.kernel_radius > 0 ? cfg.kernel_radius : auto_kernel_radius(duals, cfg.t_end);
    const int side = 2 * radius + 1;
    std::vector<double> stamps(static_cast<std::size_t>(h) * w * side * side);
    parallel_rows(h, [&](int rr) {
        for (int cc = 0; cc < w; ++cc) {
            const auto s = finsler_gauss_kernel(duals.at(rr, cc), cfg.dt, radius);
            std::copy(s.begin(), s.end(),
                      stamps.begin() + (static_cast<std::size_t>(rr) * w + cc) * side * side);
        }
    });

    GrayImage nxt(h, w, 0.0);
    for (int step = 0; step < steps; ++step) {
        parallel_rows(h, [&](int rr) {
            for (int cc = 0; cc < w; ++cc) {
                const double* stamp = stamps.data() + (static_cast<std::size_t>(rr) * w + cc) * side * side;
                double acc = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx) {
                        acc += stamp[static_cast<std::size_t>(dy + radius) * side + (dx + radius)] *
                               pixel_at(cur, rr + dy, cc + dx, pad);
                    }
                }
                nxt.at(rr, cc) = acc;
            }
        });
        std::swap(cur, nxt);
    }
    return cur;
}

// Gradients this small carry no usable direction (subnormal territory).
constexpr double kFlowTiny = 1e-300;

VecField flow_field(const GrayImage& diffused, PaddingMode pad) {
    const VecField g = sobel_gradient(diffused, pad);
    VecField out(g.height, g.width);
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        const double n = g.v[i].norm();
        out.v[i] = n > kFlowTiny ? Vec2{-g.v[i].x / n, -g.v[i].y / n} : Vec2{0.0, 0.0};
    }
    return out;
}

KernelSupport flow_stencil(int r, int c, const RandersParams& dual, const GrayImage& diffused,
                           const UgbConfig& cfg, const PolarScheme& scheme, PaddingMode pad) {
    const int steps = diffusion_steps(cfg);
    const std::vector<PolarSample> samples = polar_samples(scheme);
    KernelSupport stencil;
    stencil.k = scheme.k;
    stencil.offsets.reserve(samples.size());
    for (const PolarSample& ps : samples) {
        stencil.offsets.push_back(unit_circle_point(dual, ps.theta) * (cfg.s0 * ps.s));
    }
    if (steps == 0) return stencil;

    // The diffused image is static during the flow; its Sobel field is
    // computed once and looked up bilinearly at the moving points.
    const VecField grad = sobel_gradient(diffused, pad);
    for (Vec2& off : stencil.offsets) {
        double pr = r + off.y;
        double pc = c + off.x;
        for (int step = 0; step < steps; ++step) {
            const Vec2 g = bilinear_vec(grad, pr, pc, pad, diffused);
            const double n = g.norm();
            if (n <= kFlowTiny) continue;  // stalled point
            pr -= cfg.dt * g.y / n;
            pc -= cfg.dt * g.x / n;
        }
        off = Vec2{pc - c, pr - r};
    }
    return stencil;
}

GrayImage ugb_convolve(const GrayImage& img, const KernelWeights& weights,
                       const MetricField& field, const UgbConfig& cfg, const PolarScheme& scheme,
                       PaddingMode pad) {
    const int h = img.height();
    const int w = img.width();
    if (field.height != h || field.width != w)
        throw std::invalid_argument("ugb_convolve: field shape mismatch");
    if (scheme.k != weights.k) throw std::invalid_argument("ugb_convolve: scheme/weights k mismatch");
    if (static_cast<long long>(h) * w > cfg.pixel_budget && !cfg.allow_large)
        throw std::runtime_error("ugb_convolve: image exceeds pixel budget (override to proceed)");

    const MetricField duals = dual_field(field);
    const int steps = diffusion_steps(cfg);
    const std::vector<PolarSample> samples = polar_samples(scheme);
    GrayImage out(h, w);

    if (steps == 0) {
        parallel_rows(h, [&](int r) {
            for (int c = 0; c < w; ++c) {
                const RandersParams& d = duals.at(r, c);
                double acc = 0.0;
                for (std::size_t j = 0; j < samples.size(); ++j) {
                    const Vec2 off = unit_circle_point(d, samples[j].theta) * (cfg.s0 * samples[j].s);
                    acc += weights.weights[j] * sample_bilinear(img, r + off.y, c + off.x, pad);
                }
                out.at(r, c) = acc;
            }
        });
        return out;
    }

    const int radius =
        cfg.kernel_radius > 0 ? cfg.kernel_radius : auto_kernel_radius(duals, cfg.t_end);
    const int side = 2 * radius + 1;
    std::vector<double> stamps(static_cast<std::size_t>(h) * w * side * side);
    parallel_rows(h, [&](int rr) {
        for (int cc = 0; cc < w; ++cc) {
            const auto s = finsler_gauss_kernel(duals.at(rr, cc), cfg.dt, radius);
            std::copy(s.begin(), s.end(),
                      stamps.begin() + (static_cast<std::size_t>(rr) * w + cc) * side * side);
        }
    });

    // Diffusion restricted to a window around each center; heat outside stays
    // below truncation level when the window half-width dominates the spread.
    const int half = std::min(radius * steps, (std::min(h, w) - 1) / 2);
    const int wside = 2 * half + 1;

    parallel_rows(h, [&](int r) {
        std::vector<double> cur(static_cast<std::size_t>(wside) * wside);
        std::vector<double> nxt(static_cast<std::size_t>(wside) * wside);
        for (int c = 0; c < w; ++c) {
            std::fill(cur.begin(), cur.end(), 0.0);
            cur[static_cast<std::size_t>(half) * wside + half] = 1.0;
            for (int step = 0; step < steps; ++step) {
                for (int wi = 0; wi < wside; ++wi) {
                    const int ir = resolve_index(r - half + wi, h, pad);
                    for (int wj = 0; wj < wside; ++wj) {
                        const int ic = resolve_index(c - half + wj, w, pad);
                        const double* stamp =
                            stamps.data() + (static_cast<std::size_t>(ir) * w + ic) * side * side;
                        double acc = 0.0;
                        for (int dy = -radius; dy <= radius; ++dy) {
                            const int ni = wi + dy;
                            if (ni < 0 || ni >= wside) continue;
                            const double* row = cur.data() + static_cast<std::size_t>(ni) * wside;
                            const double* srow =
                                stamp + static_cast<std::size_t>(dy + radius) * side;
                            for (int dx = -radius; dx <= radius; ++dx) {
                                const int nj = wj + dx;
                                if (nj < 0 || nj >= wside) continue;
                                acc += srow[dx + radius] * row[nj];
                            }
                        }
                        nxt[static_cast<std::size_t>(wi) * wside + wj] = acc;
                    }
                }
                std::swap(cur, nxt);
            }
            GrayImage window(wside, wside, cur);
            const KernelSupport flowed =
                flow_stencil(half, half, duals.at(r, c), window, cfg, scheme, PaddingMode::Zero);
            double acc = 0.0;
            for (std::size_t j = 0; j < flowed.offsets.size(); ++j) {
                const Vec2& off = flowed.offsets[j];
                acc += weights.weights[j] * sample_bilinear(img, r + off.y, c + off.x, pad);
            }
            out.at(r, c) = acc;
        }
    });
    return out;
}

}  // namespace finslerconv
