#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "finslerconv/conv.hpp"
#include "finslerconv/image.hpp"
#include "finslerconv/metric_params.hpp"
#include "finslerconv/sampling.hpp"

namespace finslerconv {

enum class ParamPath { Cholesky5, Spectral7 };

inline int param_channels(ParamPath path) { return path == ParamPath::Cholesky5 ? 5 : 7; }

// Per-pixel unconstrained parameter planes (metric raws or offset pairs).
struct RawField {
    int height{0};
    int width{0};
    int channels{0};
    std::vector<double> data;  // (r*W + c) * C + ch

    RawField() = default;
    RawField(int h, int w, int c)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, 0.0) {}
    double at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    double& at(int r, int c, int ch) {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    const double* pixel(int r, int c) const {
        return data.data() + (static_cast<std::size_t>(r) * width + c) * channels;
    }
    double* pixel(int r, int c) {
        return data.data() + (static_cast<std::size_t>(r) * width + c) * channels;
    }
};

struct GradOptions {
    ParamHyper hyper;
    ParamPath path = ParamPath::Cholesky5;
    // Treat the constrain_omega scale factor as a constant in the backward
    // pass (its forward value still tracks the raw parameters).
    bool detach_omega_scale = true;
    bool learn_weights = false;
    PolarScheme scheme{PolarVariant::Grid, 11};
    PaddingMode pad = PaddingMode::Replicate;
};

// Sensitivities of the unit-circle point to (m11, m12, m22, w1, w2):
// d y / d gamma = -(dF/dgamma)(u_theta) u_theta / F(u_theta)^2.
std::array<Vec2, 5> d_unit_circle_d_gamma(const RandersParams& p, double theta);

// Metric parameters from one pixel of a raw field.
RandersParams params_from_raw(const double* raw, ParamPath path, const ParamHyper& h);

// Forward metric UTB convolution driven by per-pixel raw parameters.
GrayImage utb_forward(const GrayImage& img, const KernelWeights& weights, const RawField& raw,
                      const GradOptions& opt);

// Forward deformable convolution; raw holds 2k^2 channels per pixel, cell j
// contributing (dx, dy) in channels (2j, 2j+1).
GrayImage deformable_forward(const GrayImage& img, const KernelWeights& weights,
                             const RawField& raw, PaddingMode pad);

struct ConvGrads {
    RawField raw;                 // dMSE/draw, same shape as the input field
    std::vector<double> weights;  // dMSE/dg, empty unless learn_weights
    double mse_value{0.0};        // MSE of the forward pass against the target
};

// MSE gradients (mean over pixels) through the metric parameterization, the
// unit-circle sensitivities and the bilinear interpolant's cell gradients.
ConvGrads utb_conv_grads(const GrayImage& img, const KernelWeights& weights, const RawField& raw,
                         const GradOptions& opt, const GrayImage& target);

ConvGrads deformable_conv_grads(const GrayImage& img, const KernelWeights& weights,
                                const RawField& raw, PaddingMode pad, const GrayImage& target,
                                bool learn_weights);

// Analytic-vs-central-difference comparison on a given configuration.
struct GradEntry {
    std::string param_class;
    double analytic;
    double fd;
    double rel_err;
};
struct GradReport {
    std::vector<GradEntry> entries;
    // Largest relative error among entries whose FD magnitude exceeds fd_floor.
    double max_rel_err(double fd_floor = 1e-8) const;
};

// FD of the loss the analytic gradient actually differentiates: when
// detach_omega_scale is set, the constrain_omega scales are frozen at the
// base point before differencing.
GradReport gradcheck_utb(const GrayImage& img, const KernelWeights& weights, const RawField& raw,
                         const GradOptions& opt, const GrayImage& target, double h = 1e-6);
GradReport gradcheck_deformable(const GrayImage& img, const KernelWeights& weights,
                                const RawField& raw, PaddingMode pad, const GrayImage& target,
                                bool learn_weights, double h = 1e-6);

enum class TrainMethod { UtbRaw, DeformableRaw };

struct TrainConfig {
    int iterations = 100;
    double lr = -1.0;             // negative selects via lr_find over lr_grid
    std::vector<double> lr_grid;  // empty uses the method default grid
    bool learn_weights = false;   // LKW when set, FKW otherwise
    double eps_omega = 0.1;
    std::uint64_t seed = 0;
    int k = 11;
    PolarVariant scheme = PolarVariant::Grid;
    PaddingMode pad = PaddingMode::Replicate;
    ParamPath path = ParamPath::Cholesky5;
    bool detach_omega_scale = true;
    ParamHyper hyper;
};

struct TrainResult {
    RawField params;
    KernelWeights weights;
    std::vector<double> train_curve;  // MSE after i updates, i = 0..iterations
    std::vector<double> test_curve;
    double mse_train{0.0};
    double mse_test{0.0};
    double delta_mse{0.0};
    double chosen_lr{0.0};
};

// Plain full-batch gradient descent of MSE(conv(noisy_train), clean);
// the test curve applies the current parameters to noisy_test. Aborts with a
// diagnostic when the train MSE exceeds 1e3 times its initial value.
TrainResult train_single_image(const GrayImage& noisy_train, const GrayImage& noisy_test,
                               const GrayImage& clean, const TrainConfig& cfg, TrainMethod method);

// Candidate minimizing the one-epoch train MSE; ties break toward smaller
// rates, non-finite results disqualify a candidate.
double lr_find(const std::function<double(double)>& mse_after_one_epoch,
               const std::vector<double>& grid);

// Log-spaced grid from 10^lo to 10^hi with `per_decade` points per decade.
std::vector<double> log_grid(double lo, double hi, int per_decade);

std::vector<double> default_lr_grid(TrainMethod method);

// Initial raw field for a method (identity metric for the Cholesky path,
// zeros for the spectral path and for deformable offsets).
RawField initial_raw_field(int height, int width, TrainMethod method, const TrainConfig& cfg);

}  // namespace finslerconv
