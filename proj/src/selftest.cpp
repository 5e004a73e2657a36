#include "finslerconv/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "finslerconv/conv.hpp"
#include "finslerconv/experiments.hpp"
#include "finslerconv/geodesic.hpp"
#include "finslerconv/heuristic.hpp"
#include "finslerconv/image.hpp"
#include "finslerconv/metric_params.hpp"
#include "finslerconv/phantom.hpp"
#include "finslerconv/randers.hpp"
#include "finslerconv/rng.hpp"
#include "finslerconv/sampling.hpp"
#include "finslerconv/train.hpp"

namespace finslerconv {

namespace {

RandersParams random_params_bounded(Rng& rng, double max_ratio, double max_drift) {
    const double span = 0.5 * std::log10(max_ratio);
    const double lam1 = std::pow(10.0, rng.uniform(-span, span));
    const double lam2 = std::pow(10.0, rng.uniform(-span, span));
    const double th = rng.uniform(0.0, 2.0 * M_PI);
    const double co = std::cos(th);
    const double si = std::sin(th);
    const Sym2 m{lam1 * co * co + lam2 * si * si, (lam1 - lam2) * co * si,
                 lam1 * si * si + lam2 * co * co};
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 e{std::cos(phi), std::sin(phi)};
    const double unit = omega_dual_norm(m, e);
    const Vec2 omega = e * (rng.uniform(0.0, max_drift) / unit);
    return RandersParams::make(m, omega);
}

RandersParams random_params(Rng& rng, double max_drift = 0.95) {
    return random_params_bounded(rng, 1e4, max_drift);
}

Vec2 random_dir(Rng& rng) {
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    return Vec2{std::cos(phi), std::sin(phi)};
}

GrayImage random_image(Rng& rng, int h, int w) {
    GrayImage img(h, w);
    for (auto& v : img.data()) v = rng.uniform01();
    return img;
}

GrayImage circshift(const GrayImage& img, int dr, int dc) {
    GrayImage out(img.height(), img.width());
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            out.at((r + dr) % img.height(), (c + dc) % img.width()) = img.at(r, c);
    return out;
}

double max_abs_diff(const GrayImage& a, const GrayImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

GrayImage smooth_test_image(int h, int w, double phase) {
    GrayImage img(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            img.at(r, c) = 0.55 + 0.25 * std::sin(2.0 * M_PI * (c + phase) / w) *
                                      std::cos(2.0 * M_PI * (r - 0.7 * phase) / h);
    return img;
}

using Check = std::function<void(std::ostringstream&)>;  // throws or appends detail on failure

SuiteResult run_one(const std::string& name, const Check& check) {
    SuiteResult res;
    res.name = name;
    std::ostringstream detail;
    try {
        check(detail);
        res.detail = detail.str();
        res.passed = res.detail.empty();
    } catch (const std::exception& err) {
        res.passed = false;
        res.detail = err.what();
    }
    return res;
}

}  // namespace

std::vector<SuiteResult> run_selftest(bool quick) {
    std::vector<SuiteResult> out;
    auto add = [&](const std::string& name, const Check& check) {
        out.push_back(run_one(name, check));
    };

    add("randers-positive-homogeneity", [&](std::ostringstream& d) {
        Rng rng(101);
        for (int i = 0; i < 10000; ++i) {
            const RandersParams p = random_params(rng);
            const Vec2 u = random_dir(rng) * std::pow(10.0, rng.uniform(-1.0, 1.0));
            const double lam = rng.uniform(1e-6, 10.0);
            const double lhs = randers_eval(p, u * lam);
            const double rhs = lam * randers_eval(p, u);
            if (std::abs(lhs - rhs) > 1e-12 * std::max(std::abs(rhs), 1e-30)) {
                d << "homogeneity violated: " << lhs << " vs " << rhs;
                return;
            }
        }
    });

    add("randers-triangle-inequality", [&](std::ostringstream& d) {
        Rng rng(102);
        for (int i = 0; i < 10000; ++i) {
            const RandersParams p = random_params(rng);
            const Vec2 u = random_dir(rng) * rng.uniform(0.0, 5.0);
            const Vec2 v = random_dir(rng) * rng.uniform(0.0, 5.0);
            if (randers_eval(p, u + v) > randers_eval(p, u) + randers_eval(p, v) + 1e-12) {
                d << "triangle inequality violated at trial " << i;
                return;
            }
        }
    });

    add("randers-ellipse-membership", [&](std::ostringstream& d) {
        Rng rng(103);
        for (int i = 0; i < 1000; ++i) {
            const RandersParams p = random_params(rng);
            const Vec2 y = unit_circle_point(p, rng.uniform(0.0, 2.0 * M_PI));
            const double lhs = p.m.quad(y);
            const double t = 1.0 - p.omega.dot(y);
            if (std::abs(lhs - t * t) > 1e-9) {
                d << "ellipse residual " << std::abs(lhs - t * t);
                return;
            }
        }
    });

    add("randers-dual-involution", [&](std::ostringstream& d) {
        Rng rng(104);
        for (int i = 0; i < 1000; ++i) {
            const RandersParams p = random_params(rng);
            const RandersParams q = dual_randers(dual_randers(p));
            const double scale = std::max(1.0, p.m.max_eigenvalue());
            const double err =
                std::max({std::abs(q.m.m11 - p.m.m11), std::abs(q.m.m12 - p.m.m12),
                          std::abs(q.m.m22 - p.m.m22), std::abs(q.omega.x - p.omega.x),
                          std::abs(q.omega.y - p.omega.y)});
            if (err > 1e-8 * scale) {
                d << "involution error " << err << " at trial " << i;
                return;
            }
        }
    });

    add("randers-utb-reconstruction", [&](std::ostringstream& d) {
        // 256 angular samples resolve moderately anisotropic balls to 1e-3;
        // extreme axis ratios would need proportionally more samples.
        Rng rng(105);
        for (int trial = 0; trial < 20; ++trial) {
            const RandersParams p = random_params_bounded(rng, 10.0, 0.6);
            std::vector<Vec2> boundary;
            for (int i = 0; i < 256; ++i)
                boundary.push_back(unit_circle_point(p, 2.0 * M_PI * i / 256));
            const ReconstructedMetric rec(boundary);
            for (int i = 0; i < 50; ++i) {
                const Vec2 u = random_dir(rng) * std::pow(10.0, rng.uniform(-1.0, 1.0));
                const double want = randers_eval(p, u);
                if (std::abs(rec(u) - want) > 1e-3 * want) {
                    d << "reconstruction error " << std::abs(rec(u) - want) / want;
                    return;
                }
            }
        }
    });

    add("params-fuzz-invariants", [&](std::ostringstream& d) {
        Rng rng(106);
        ParamHyper h;
        h.eps_omega = 0.1;
        const int n = quick ? 20000 : 100000;
        for (int i = 0; i < n; ++i) {
            auto draw = [&] {
                return (rng.uniform01() < 0.5 ? -1.0 : 1.0) * std::pow(10.0, rng.uniform(-6.0, 6.0));
            };
            RandersParams p;
            const int which = i % 3;
            if (which == 0)
                p = metric_from_5(RawParams5{draw(), draw(), draw(), draw(), draw()}, h);
            else if (which == 1)
                p = metric_from_6(RawParams6{draw(), draw(), draw(), draw(), draw(), draw()}, h);
            else
                p = metric_from_7(RawParams7{draw(), draw(), draw(), draw(), draw(), draw(), draw()},
                                  h);
            // The drift norm saturates to exactly 1 - eps_omega in floating
            // point for huge raw drifts; allow rounding-level slack.
            if (!(p.m.min_eigenvalue() > 1e-12) ||
                !(omega_dual_norm(p.m, p.omega) < 1.0 - h.eps_omega + 1e-12)) {
                d << "invariant violated at trial " << i;
                return;
            }
        }
    });

    add("params-riemannian-reduction", [&](std::ostringstream& d) {
        Rng rng(107);
        ParamHyper h;
        h.eps_omega = 1.0;
        for (int i = 0; i < 1000; ++i) {
            const RandersParams p = metric_from_5(
                RawParams5{rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()},
                h);
            if (p.omega.x != 0.0 || p.omega.y != 0.0) {
                d << "omega not exactly zero with eps_omega=1";
                return;
            }
        }
    });

    add("params-eigen-scale-range", [&](std::ostringstream& d) {
        Rng rng(108);
        ParamHyper h;
        for (int i = 0; i < 10000; ++i) {
            const double s = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * std::pow(10.0, rng.uniform(-6.0, 6.0));
            const double v = eigen_scale_from_raw(s, h);
            if (!(v >= h.s_min && v <= h.s_max)) {
                d << "scale " << v << " outside [s_min, s_max]";
                return;
            }
        }
    });

    add("params-omega-odd", [&](std::ostringstream& d) {
        Rng rng(109);
        ParamHyper h;
        h.eps_omega = 0.2;
        for (int i = 0; i < 1000; ++i) {
            const RandersParams base = random_params(rng);
            const Vec2 w{rng.normal() * 3.0, rng.normal() * 3.0};
            const Vec2 a = constrain_omega(w, base.m, h);
            const Vec2 b = constrain_omega(-w, base.m, h);
            if (a.x != -b.x || a.y != -b.y) {
                d << "constrain_omega not odd";
                return;
            }
        }
    });

    add("params-differentiability-fuzz", [&](std::ostringstream& d) {
        Rng rng(110);
        ParamHyper h;
        h.eps_omega = 0.1;
        const double step = 1e-6;
        for (int i = 0; i < 1000; ++i) {
            double raw[5];
            for (double& v : raw) v = rng.normal() * 2.0;
            for (int ch = 0; ch < 5; ++ch) {
                double up[5], dn[5];
                std::copy(raw, raw + 5, up);
                std::copy(raw, raw + 5, dn);
                up[ch] += step;
                dn[ch] -= step;
                const RandersParams pu =
                    metric_from_5(RawParams5{up[0], up[1], up[2], up[3], up[4]}, h);
                const RandersParams pd =
                    metric_from_5(RawParams5{dn[0], dn[1], dn[2], dn[3], dn[4]}, h);
                const double fd[5] = {(pu.m.m11 - pd.m.m11) / (2 * step),
                                      (pu.m.m12 - pd.m.m12) / (2 * step),
                                      (pu.m.m22 - pd.m.m22) / (2 * step),
                                      (pu.omega.x - pd.omega.x) / (2 * step),
                                      (pu.omega.y - pd.omega.y) / (2 * step)};
                for (double g : fd) {
                    if (!std::isfinite(g)) {
                        d << "non-finite finite difference at trial " << i;
                        return;
                    }
                }
            }
        }
    });

    add("image-bilinear-linearity", [&](std::ostringstream& d) {
        Rng rng(111);
        const GrayImage a = random_image(rng, 16, 17);
        const GrayImage b = random_image(rng, 16, 17);
        for (int i = 0; i < 1000; ++i) {
            const double lam = rng.uniform(-2.0, 2.0);
            GrayImage mix(16, 17);
            for (std::size_t j = 0; j < mix.size(); ++j)
                mix.data()[j] = a.data()[j] + lam * b.data()[j];
            const double r = rng.uniform(-5.0, 20.0);
            const double c = rng.uniform(-5.0, 22.0);
            for (PaddingMode pad :
                 {PaddingMode::Periodic, PaddingMode::Zero, PaddingMode::Replicate}) {
                const double lhs = sample_bilinear(mix, r, c, pad);
                const double rhs =
                    sample_bilinear(a, r, c, pad) + lam * sample_bilinear(b, r, c, pad);
                if (std::abs(lhs - rhs) > 1e-12) {
                    d << "bilinear not linear in the image";
                    return;
                }
            }
        }
    });

    add("image-periodic-wrap", [&](std::ostringstream& d) {
        Rng rng(112);
        const GrayImage a = random_image(rng, 12, 9);
        for (int i = 0; i < 200; ++i) {
            const double r = rng.uniform(-3.0, 15.0);
            const double c = rng.uniform(-3.0, 12.0);
            const double v0 = sample_bilinear(a, r, c, PaddingMode::Periodic);
            const double v1 = sample_bilinear(a, r + 12.0, c, PaddingMode::Periodic);
            if (std::abs(v0 - v1) > 1e-12) {
                d << "periodic wrap mismatch";
                return;
            }
        }
    });

    add("image-sobel-shift-invariance", [&](std::ostringstream& d) {
        Rng rng(113);
        const GrayImage a = random_image(rng, 14, 11);
        GrayImage b = a;
        for (auto& v : b.data()) v += 0.37;
        const VecField ga = sobel_gradient(a, PaddingMode::Replicate);
        const VecField gb = sobel_gradient(b, PaddingMode::Replicate);
        for (std::size_t i = 0; i < ga.v.size(); ++i) {
            if (std::abs(ga.v[i].x - gb.v[i].x) > 1e-12 ||
                std::abs(ga.v[i].y - gb.v[i].y) > 1e-12) {
                d << "sobel changed under constant shift";
                return;
            }
        }
        const GrayImage flat(9, 9, 0.42);
        const VecField gf = sobel_gradient(flat, PaddingMode::Replicate);
        for (const Vec2& g : gf.v) {
            if (g.x != 0.0 || g.y != 0.0) {
                d << "sobel of constant image nonzero";
                return;
            }
        }
    });

    add("sampling-onion-counts", [&](std::ostringstream& d) {
        for (int k = 1; k <= 121; k += 2) {
            const auto s = polar_samples(PolarScheme{PolarVariant::OnionPeel, k});
            if (s.size() != static_cast<std::size_t>(k) * k) {
                d << "onion count " << s.size() << " for k=" << k;
                return;
            }
        }
    });

    add("sampling-utb-unit-ring", [&](std::ostringstream& d) {
        Rng rng(114);
        for (int i = 0; i < 200; ++i) {
            const RandersParams p = random_params(rng);
            const KernelSupport sup = utb_support(p, PolarScheme{PolarVariant::OnionPeel, 5});
            const auto samples = polar_samples(PolarScheme{PolarVariant::OnionPeel, 5});
            for (std::size_t j = 0; j < samples.size(); ++j) {
                if (samples[j].s == 1.0 &&
                    std::abs(randers_eval(p, sup.offsets[j]) - 1.0) > 1e-12) {
                    d << "outer ring point off the unit sphere";
                    return;
                }
            }
        }
    });

    add("sampling-deterministic", [&](std::ostringstream& d) {
        Rng rng(115);
        const RandersParams p = random_params(rng);
        for (const PolarVariant variant : {PolarVariant::Grid, PolarVariant::OnionPeel}) {
            const PolarScheme scheme{variant, 7};
            const auto s1 = polar_samples(scheme);
            const auto s2 = polar_samples(scheme);
            const auto u1 = utb_support(p, scheme);
            const auto u2 = utb_support(p, scheme);
            for (std::size_t i = 0; i < s1.size(); ++i) {
                if (s1[i].s != s2[i].s || s1[i].theta != s2[i].theta ||
                    u1.offsets[i].x != u2.offsets[i].x || u1.offsets[i].y != u2.offsets[i].y) {
                    d << "sampling not reproducible";
                    return;
                }
            }
        }
    });

    add("conv-weight-linearity", [&](std::ostringstream& d) {
        Rng rng(116);
        const GrayImage img = random_image(rng, 12, 13);
        const KernelSupport sup = reference_grid(3);
        KernelWeights w1{3, {}}, w2{3, {}}, mix{3, {}};
        for (int j = 0; j < 9; ++j) {
            w1.weights.push_back(rng.normal());
            w2.weights.push_back(rng.normal());
        }
        const double a = 0.7, b = -1.3;
        for (int j = 0; j < 9; ++j) mix.weights.push_back(a * w1.weights[j] + b * w2.weights[j]);
        const GrayImage o1 = convolve(img, w1, sup, PaddingMode::Replicate);
        const GrayImage o2 = convolve(img, w2, sup, PaddingMode::Replicate);
        const GrayImage om = convolve(img, mix, sup, PaddingMode::Replicate);
        for (std::size_t i = 0; i < om.size(); ++i) {
            if (std::abs(om.data()[i] - (a * o1.data()[i] + b * o2.data()[i])) > 1e-12) {
                d << "convolution not linear in the weights";
                return;
            }
        }
    });

    add("conv-shift-equivariance", [&](std::ostringstream& d) {
        const GrayImage base = make_phantom(64, 64);
        const GrayImage noisy = add_gaussian_noise(base, 0.1, 7);
        HeuristicConfig hc;
        hc.eps_omega = 0.5;
        hc.pad = PaddingMode::Periodic;
        const KernelWeights w = KernelWeights::uniform(5);
        const PolarScheme scheme{PolarVariant::Grid, 5};
        const GrayImage direct = metric_utb_convolve(noisy, w, heuristic_field(noisy, hc), scheme,
                                                     PaddingMode::Periodic);
        const GrayImage shifted_in = circshift(noisy, 3, 7);
        const GrayImage conv_shifted = metric_utb_convolve(
            shifted_in, w, heuristic_field(shifted_in, hc), scheme, PaddingMode::Periodic);
        const double err = max_abs_diff(conv_shifted, circshift(direct, 3, 7));
        if (err > 1e-6) d << "shift equivariance error " << err;
    });

    add("conv-reduction-hierarchy", [&](std::ostringstream& d) {
        Rng rng(117);
        const GrayImage img = random_image(rng, 20, 18);
        const KernelWeights w = KernelWeights::uniform(3);
        const KernelSupport ref = reference_grid(3);
        const PaddingMode pad = PaddingMode::Replicate;
        const Vec2 delta{0.7, -0.4};

        const GrayImage standard = convolve(img, w, ref, pad);
        if (max_abs_diff(convolve(img, w, dilate(ref, 1.0), pad), standard) > 1e-12) {
            d << "dilate(1) != standard";
            return;
        }
        if (max_abs_diff(convolve(img, w, shift(ref, Vec2{0, 0}), pad), standard) > 1e-12) {
            d << "shift(0) != standard";
            return;
        }
        const std::vector<Vec2> shared(9, delta);
        if (max_abs_diff(convolve(img, w, deform(ref, shared), pad),
                         convolve(img, w, shift(ref, delta), pad)) > 1e-12) {
            d << "deform(shared) != shift";
            return;
        }
        Rng prng(118);
        const RandersParams p = random_params(prng, 0.5);
        MetricField field(img.height(), img.width());
        for (auto& fp : field.params) fp = p;
        const PolarScheme scheme{PolarVariant::OnionPeel, 3};
        if (max_abs_diff(metric_utb_convolve(img, w, field, scheme, pad),
                         convolve(img, w, utb_support(p, scheme), pad)) > 1e-12) {
            d << "constant-field metric conv != fixed-support conv";
        }
    });

    add("heuristic-eigenstructure", [&](std::ostringstream& d) {
        const GrayImage img = make_phantom(48, 48);
        HeuristicConfig hc;
        const MetricField field = heuristic_field(img, hc);
        const VecField grad = sobel_gradient(img, hc.pad);
        for (int r = 0; r < img.height(); ++r) {
            for (int c = 0; c < img.width(); ++c) {
                const Vec2 g = grad.at(r, c);
                if (g.norm() <= 1e-6) continue;
                const Sym2& m = field.at(r, c).m;
                // Eigenvector for the larger eigenvalue must align with g.
                double lo, hi;
                m.eigenvalues(lo, hi);
                Vec2 e{m.m12, hi - m.m11};
                if (e.norm() < 1e-14) e = Vec2{1.0, 0.0};
                const double cross = std::abs(e.cross(g)) / (e.norm() * g.norm());
                if (cross > 1e-9) {
                    d << "principal direction misaligned by " << cross;
                    return;
                }
                if (std::abs(m.det() - hc.iota * hc.iota) > 1e-12) {
                    d << "det(M) != iota^2";
                    return;
                }
            }
        }
    });

    add("heuristic-omega-norm", [&](std::ostringstream& d) {
        const GrayImage img = make_phantom(48, 48);
        HeuristicConfig hc;
        hc.eps_omega = 0.3;
        const MetricField field = heuristic_field(img, hc);
        const VecField grad = sobel_gradient(img, hc.pad);
        for (int r = 0; r < img.height(); ++r) {
            for (int c = 0; c < img.width(); ++c) {
                const Vec2 g = grad.at(r, c);
                const Vec2 wt = g * (1.0 / (g.norm() + hc.eps));
                const RandersParams& p = field.at(r, c);
                const double wt_norm = omega_dual_norm(p.m, wt);
                const double want = (1.0 - hc.eps_omega) * wt_norm / (wt_norm + hc.eps);
                if (std::abs(omega_dual_norm(p.m, p.omega) - want) > 1e-10) {
                    d << "omega norm off target";
                    return;
                }
            }
        }
    });

    add("ugb-mass-conservation", [&](std::ostringstream& d) {
        MetricField duals(64, 64);
        for (auto& p : duals.params) p = RandersParams::riemann(Sym2::identity());
        UgbConfig cfg;
        const GrayImage heat = diffuse_dirac(32, 32, duals, cfg, PaddingMode::Periodic);
        double total = 0.0;
        for (double v : heat.data()) total += v;
        if (std::abs(total - 1.0) > 1e-9) d << "mass drift " << std::abs(total - 1.0);
    });

    add("ugb-flow-field-norms", [&](std::ostringstream& d) {
        MetricField duals(32, 32);
        for (auto& p : duals.params) p = RandersParams::riemann(Sym2::identity());
        UgbConfig cfg;
        const GrayImage heat = diffuse_dirac(16, 16, duals, cfg, PaddingMode::Periodic);
        const VecField flow = flow_field(heat, PaddingMode::Periodic);
        for (const Vec2& v : flow.v) {
            const double n = v.norm();
            if (n != 0.0 && std::abs(n - 1.0) > 1e-6) {
                d << "flow norm " << n;
                return;
            }
        }
    });

    add("ugb-stencil-rotation-symmetry", [&](std::ostringstream& d) {
        MetricField field(64, 64);
        for (auto& p : field.params) p = RandersParams::riemann(Sym2::identity());
        const MetricField duals = dual_field(field);
        UgbConfig cfg;
        const GrayImage heat = diffuse_dirac(32, 32, duals, cfg, PaddingMode::Periodic);
        const PolarScheme scheme{PolarVariant::OnionPeel, 5};
        const KernelSupport flowed =
            flow_stencil(32, 32, duals.at(32, 32), heat, cfg, scheme, PaddingMode::Periodic);
        // Onion layers have 8k' angles, so a 90-degree rotation permutes
        // sample indices within each layer by 2k'.
        std::size_t idx = 1;
        for (int layer = 1; layer <= 2; ++layer) {
            const int angles = 8 * layer;
            for (int a = 0; a < angles; ++a) {
                const Vec2 p = flowed.offsets[idx + a];
                const Vec2 q = flowed.offsets[idx + (a + 2 * layer) % angles];
                const Vec2 rot{-p.y, p.x};
                const double scale = std::max(1.0, p.norm());
                if ((q - rot).norm() / scale > 0.02) {
                    d << "rotation asymmetry " << (q - rot).norm() / scale;
                    return;
                }
            }
            idx += angles;
        }
    });

    add("ugb-t0-matches-utb", [&](std::ostringstream& d) {
        const GrayImage img = make_phantom(32, 32);
        HeuristicConfig hc;
        hc.eps_omega = 0.5;
        hc.alpha = 5.0;
        hc.iota = 1.0;
        const MetricField field = heuristic_field(img, hc);
        UgbConfig cfg;
        cfg.t_end = 0.0;
        cfg.s0 = 1.0;
        const PolarScheme scheme{PolarVariant::Grid, 5};
        const KernelWeights w = KernelWeights::uniform(5);
        const GrayImage a = ugb_convolve(img, w, field, cfg, scheme, PaddingMode::Replicate);
        const GrayImage b =
            metric_utb_convolve(img, w, dual_field(field), scheme, PaddingMode::Replicate);
        const double err = max_abs_diff(a, b);
        if (err > 1e-9) d << "t_end=0 mismatch " << err;
    });

    add("train-grad-fd-agreement", [&](std::ostringstream& d) {
        const GrayImage img = smooth_test_image(8, 8, 0.3);
        const GrayImage target = smooth_test_image(8, 8, 1.9);
        Rng rng(119);
        GradOptions opt;
        opt.hyper.eps_omega = 0.2;
        opt.scheme = PolarScheme{PolarVariant::Grid, 3};
        opt.pad = PaddingMode::Replicate;
        opt.learn_weights = true;
        const KernelWeights w = KernelWeights::uniform(3);
        for (const bool detach : {true, false}) {
            opt.detach_omega_scale = detach;
            for (const ParamPath path : {ParamPath::Cholesky5, ParamPath::Spectral7}) {
                opt.path = path;
                RawField raw(8, 8, param_channels(path));
                for (int r = 0; r < 8; ++r)
                    for (int c = 0; c < 8; ++c)
                        for (int ch = 0; ch < raw.channels; ++ch) {
                            double v = 0.15 * rng.normal();
                            if (path == ParamPath::Cholesky5 && (ch == 0 || ch == 2))
                                v += 0.35;  // moderate ball, samples off cell edges
                            raw.at(r, c, ch) = v;
                        }
                const GradReport rep = gradcheck_utb(img, w, raw, opt, target);
                if (rep.max_rel_err() > 1e-4) {
                    d << "utb grad rel err " << rep.max_rel_err() << " (path "
                      << (path == ParamPath::Cholesky5 ? "chol5" : "spec7") << ", detach "
                      << detach << ")";
                    return;
                }
            }
        }
        // The loss is piecewise quadratic in the offsets, so a larger step is
        // exact and avoids the cancellation floor of h = 1e-6.
        RawField offs(8, 8, 2 * 9);
        for (auto& v : offs.data) v = 0.2 + 0.2 * rng.uniform01();
        const GradReport rep =
            gradcheck_deformable(img, w, offs, PaddingMode::Replicate, target, true, 1e-4);
        if (rep.max_rel_err() > 1e-4) d << "deformable grad rel err " << rep.max_rel_err();
    });

    add("train-fkw-weights-frozen", [&](std::ostringstream& d) {
        const GrayImage clean = make_phantom(16, 16);
        const GrayImage tr = add_gaussian_noise(clean, 0.2, 5);
        const GrayImage te = add_gaussian_noise(clean, 0.2, 6);
        TrainConfig cfg;
        cfg.iterations = 3;
        cfg.lr = 1e3;
        cfg.k = 3;
        cfg.learn_weights = false;
        const TrainResult res = train_single_image(tr, te, clean, cfg, TrainMethod::UtbRaw);
        const KernelWeights uniform = KernelWeights::uniform(3);
        for (std::size_t j = 0; j < uniform.weights.size(); ++j) {
            if (res.weights.weights[j] != uniform.weights[j]) {
                d << "weights changed in FKW mode";
                return;
            }
        }
    });

    add("train-descent-sanity", [&](std::ostringstream& d) {
        const GrayImage clean = make_phantom(quick ? 64 : 128, quick ? 64 : 128);
        const GrayImage tr = add_gaussian_noise(clean, 0.3, 11);
        const GrayImage te = add_gaussian_noise(clean, 0.3, 12);
        TrainConfig cfg;
        cfg.iterations = quick ? 30 : 100;
        cfg.k = 5;
        cfg.eps_omega = 0.1;
        const TrainResult res = train_single_image(tr, te, clean, cfg, TrainMethod::UtbRaw);
        if (!(res.train_curve.back() < res.train_curve.front()))
            d << "train MSE did not decrease: " << res.train_curve.front() << " -> "
              << res.train_curve.back();
    });

    add("harness-reproducible-csv", [&](std::ostringstream& d) {
        const GrayImage clean = make_phantom(48, 48);
        CompareConfig cfg;
        cfg.methods = {"utb"};
        cfg.ks = {3};
        cfg.sigmas = {0.3};
        cfg.base.train.iterations = 5;
        cfg.base.train.k = 3;
        const std::string a = run_compare(clean, cfg);
        const std::string b = run_compare(clean, cfg);
        if (a != b) d << "CSV bytes differ between identical runs";
    });

    return out;
}

}  // namespace finslerconv
