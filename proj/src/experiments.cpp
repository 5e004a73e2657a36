#include "finslerconv/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "finslerconv/rng.hpp"

namespace finslerconv {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64_at(seed, tag);
}

GrayImage deformable_random_convolve(const GrayImage& img, const KernelWeights& weights,
                                     std::uint64_t seed, PaddingMode pad) {
    const int k = weights.k;
    const KernelSupport ref = reference_grid(k);
    const std::size_t cells = ref.offsets.size();
    const double half = k / 2.0;
    SupportFn provider = [&, cells, half](int r, int c, Vec2* out) {
        const std::uint64_t base =
            (static_cast<std::uint64_t>(r) * img.width() + c) * cells * 2;
        for (std::size_t j = 0; j < cells; ++j) {
            const double dx = (2.0 * uniform01_at(seed, base + 2 * j) - 1.0) * half;
            const double dy = (2.0 * uniform01_at(seed, base + 2 * j + 1) - 1.0) * half;
            out[j] = ref.offsets[j] + Vec2{dx, dy};
        }
    };
    return convolve(img, weights, provider, pad);
}

}  // namespace

DenoiseResult run_denoise(const GrayImage& clean, const DenoiseConfig& cfg) {
    DenoiseResult res;
    res.noisy = add_gaussian_noise(clean, cfg.sigma_n, cfg.seed);
    const KernelWeights w = KernelWeights::uniform(cfg.k);

    if (cfg.method == "standard") {
        res.output = convolve(res.noisy, w, reference_grid(cfg.k), cfg.pad);
    } else if (cfg.method == "dilated") {
        res.output = convolve(res.noisy, w, dilate(reference_grid(cfg.k), cfg.dilation), cfg.pad);
    } else if (cfg.method == "interp-standard") {
        // k x k uniform samples covering a 5 x 5 pixel area.
        const double s = cfg.k > 1 ? 5.0 / (cfg.k - 1) : 1.0;
        res.output = convolve(res.noisy, w, dilate(reference_grid(cfg.k), s), cfg.pad);
    } else if (cfg.method == "deformable-random") {
        res.output =
            deformable_random_convolve(res.noisy, w, derive_seed(cfg.seed, 0x0FF5E75), cfg.pad);
    } else if (cfg.method == "utb-heuristic") {
        HeuristicConfig hc;
        hc.iota = cfg.iota;
        hc.alpha = cfg.alpha;
        hc.eps_omega = cfg.eps_omega;
        hc.radius_convention = cfg.radius_convention;
        hc.omega_dir = cfg.omega_dir;
        hc.pad = cfg.pad;
        const MetricField field = heuristic_field(res.noisy, hc);
        res.output = metric_utb_convolve(res.noisy, w, field, PolarScheme{cfg.scheme, cfg.k},
                                         cfg.pad);
    } else if (cfg.method == "ugb-heuristic") {
        HeuristicConfig hc;
        hc.eps_omega = cfg.eps_omega;
        hc.radius_convention = cfg.radius_convention;
        hc.omega_dir = cfg.omega_dir;
        hc.pad = cfg.pad;
        const MetricField field = heuristic_field_ugb(res.noisy, hc);
        UgbConfig uc;
        uc.dt = cfg.ugb_dt;
        uc.t_end = cfg.ugb_t_end;
        uc.s0 = cfg.ugb_s0;
        uc.kernel_radius = cfg.ugb_kernel_radius;
        uc.allow_large = cfg.ugb_allow_large;
        res.output = ugb_convolve(res.noisy, w, field, uc, PolarScheme{cfg.scheme, cfg.k}, cfg.pad);
    } else {
        throw std::invalid_argument("run_denoise: unknown method '" + cfg.method + "'");
    }

    res.psnr_noisy = psnr(res.noisy, clean);
    res.psnr_output = psnr(res.output, clean);
    return res;
}

TrainSingleOutcome run_train_single(const GrayImage& clean, const TrainSingleConfig& cfg) {
    const TrainMethod method = cfg.method == "deformable" ? TrainMethod::DeformableRaw
                               : cfg.method == "utb"
                                   ? TrainMethod::UtbRaw
                                   : throw std::invalid_argument("run_train_single: method '" +
                                                                 cfg.method + "'");
    TrainSingleOutcome out;
    out.noisy_train = add_gaussian_noise(clean, cfg.sigma_n, cfg.seed_train);
    out.noisy_test = add_gaussian_noise(clean, cfg.sigma_n, cfg.seed_test);
    out.result = train_single_image(out.noisy_train, out.noisy_test, clean, cfg.train, method);

    GradOptions opt;
    opt.hyper = cfg.train.hyper;
    opt.hyper.eps_omega = cfg.train.eps_omega;
    opt.path = cfg.train.path;
    opt.detach_omega_scale = cfg.train.detach_omega_scale;
    opt.scheme = PolarScheme{cfg.train.scheme, cfg.train.k};
    opt.pad = cfg.train.pad;
    if (method == TrainMethod::UtbRaw) {
        out.denoised_train = utb_forward(out.noisy_train, out.result.weights, out.result.params, opt);
        out.denoised_test = utb_forward(out.noisy_test, out.result.weights, out.result.params, opt);
    } else {
        out.denoised_train =
            deformable_forward(out.noisy_train, out.result.weights, out.result.params, cfg.train.pad);
        out.denoised_test =
            deformable_forward(out.noisy_test, out.result.weights, out.result.params, cfg.train.pad);
    }
    return out;
}

std::string curves_csv(const TrainResult& result) {
    std::ostringstream os;
    os << "iteration,train_mse,test_mse\n";
    for (std::size_t i = 0; i < result.train_curve.size(); ++i) {
        os << i << "," << format_double(result.train_curve[i]) << ","
           << format_double(result.test_curve[i]) << "\n";
    }
    return os.str();
}

std::string compare_csv_header() {
    return "method,k,sigma_n,eps_omega,lr,iterations,mse_train,mse_test,delta_mse,status";
}

std::string summary_row(const TrainSingleConfig& cfg, const TrainResult& result) {
    std::ostringstream os;
    os << cfg.method << "," << cfg.train.k << "," << format_double(cfg.sigma_n) << ","
       << format_double(cfg.train.eps_omega) << "," << format_double(result.chosen_lr) << ","
       << cfg.train.iterations << "," << format_double(result.mse_train) << ","
       << format_double(result.mse_test) << "," << format_double(result.delta_mse) << ",ok";
    return os.str();
}

std::string run_compare(const GrayImage& clean, const CompareConfig& cfg) {
    std::ostringstream os;
    os << compare_csv_header() << "\n";
    for (const std::string& method : cfg.methods) {
        for (int k : cfg.ks) {
            for (double sigma : cfg.sigmas) {
                TrainSingleConfig cell = cfg.base;
                cell.method = method;
                cell.sigma_n = sigma;
                cell.train.k = k;
                try {
                    const TrainSingleOutcome outcome = run_train_single(clean, cell);
                    os << summary_row(cell, outcome.result) << "\n";
                } catch (const std::exception& err) {
                    std::string what = err.what();
                    for (char& ch : what)
                        if (ch == ',' || ch == '\n') ch = ';';
                    os << method << "," << k << "," << format_double(sigma) << ","
                       << format_double(cell.train.eps_omega) << ",,,,,,error:" << what << "\n";
                }
            }
        }
    }
    return os.str();
}

MetricField field_from_head(const GrayImage& img, const std::vector<KernelWeights>& head,
                            const ParamHyper& hyper, PaddingMode pad) {
    if (head.size() != 5)
        throw std::invalid_argument("field_from_head: expected a 5-channel head");
    const std::vector<GrayImage> raw = intermediate_head(img, head, pad);
    MetricField field(img.height(), img.width());
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            const double vals[5] = {raw[0].at(r, c), raw[1].at(r, c), raw[2].at(r, c),
                                    raw[3].at(r, c), raw[4].at(r, c)};
            field.at(r, c) = params_from_raw(vals, ParamPath::Cholesky5, hyper);
        }
    }
    return field;
}

TrainDatasetResult run_train_dataset(const std::vector<GrayImage>& clean_images,
                                     const TrainDatasetConfig& cfg) {
    if (clean_images.empty()) throw std::invalid_argument("run_train_dataset: no images");
    TrainDatasetResult res;
    res.head = utb_head_init(cfg.k);
    const KernelWeights w = KernelWeights::uniform(cfg.k);
    const KernelSupport grid = reference_grid(cfg.k);

    GradOptions opt;
    opt.hyper.eps_omega = cfg.eps_omega;
    opt.path = ParamPath::Cholesky5;
    opt.scheme = PolarScheme{cfg.scheme, cfg.k};
    opt.pad = cfg.pad;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_se = 0.0;
        for (std::size_t idx = 0; idx < clean_images.size(); ++idx) {
            const GrayImage& clean = clean_images[idx];
            const GrayImage noisy = add_gaussian_noise(
                clean, cfg.sigma_n, splitmix64_at(cfg.seed, epoch * clean_images.size() + idx));

            const std::vector<GrayImage> head_out = intermediate_head(noisy, res.head, cfg.pad);
            RawField raw(noisy.height(), noisy.width(), 5);
            for (int r = 0; r < noisy.height(); ++r)
                for (int c = 0; c < noisy.width(); ++c)
                    for (int ch = 0; ch < 5; ++ch) raw.at(r, c, ch) = head_out[ch].at(r, c);

            const ConvGrads grads = utb_conv_grads(noisy, w, raw, opt, clean);
            epoch_se += grads.mse_value;

            // Chain raw-parameter gradients into the head weights:
            // d raw_ch(x) / d head_ch[cell] = noisy(x + grid_cell).
            for (int ch = 0; ch < 5; ++ch) {
                for (std::size_t cell = 0; cell < grid.offsets.size(); ++cell) {
                    const Vec2& o = grid.offsets[cell];
                    double g = 0.0;
                    for (int r = 0; r < noisy.height(); ++r) {
                        double row = 0.0;
                        for (int c = 0; c < noisy.width(); ++c) {
                            row += grads.raw.at(r, c, ch) *
                                   sample_bilinear(noisy, r + o.y, c + o.x, cfg.pad);
                        }
                        g += row;
                    }
                    res.head[ch].weights[cell] -= cfg.lr * g;
                }
            }
        }
        res.epoch_mse.push_back(epoch_se / clean_images.size());
    }
    return res;
}

}  // namespace finslerconv
