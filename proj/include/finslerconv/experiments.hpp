#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finslerconv/geodesic.hpp"
#include "finslerconv/heuristic.hpp"
#include "finslerconv/image.hpp"
#include "finslerconv/train.hpp"

namespace finslerconv {

// Shortest decimal that round-trips a double; used for all CSV output so
// identical runs produce identical bytes.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Heuristic denoising experiment: add noise to a clean image, filter it with
// one of the k x k methods, report PSNR against the clean image.

struct DenoiseConfig {
    std::string method = "utb-heuristic";
    // standard | dilated | interp-standard | deformable-random |
    // utb-heuristic | ugb-heuristic
    int k = 11;
    double sigma_n = 0.3;
    std::uint64_t seed = 1;
    double eps_omega = 1.0;
    double iota = 0.1;
    double alpha = 100.0;
    double dilation = 3.0;
    PolarVariant scheme = PolarVariant::Grid;
    PaddingMode pad = PaddingMode::Replicate;
    RadiusConvention radius_convention = RadiusConvention::Sqrt;
    OmegaDir omega_dir = OmegaDir::Grad;
    double ugb_dt = 0.01;
    double ugb_t_end = 0.1;
    double ugb_s0 = 2.0;
    int ugb_kernel_radius = 0;
    bool ugb_allow_large = false;
};

struct DenoiseResult {
    GrayImage noisy;
    GrayImage output;
    double psnr_noisy{0.0};
    double psnr_output{0.0};
};

DenoiseResult run_denoise(const GrayImage& clean, const DenoiseConfig& cfg);

// ---------------------------------------------------------------------------
// Single-image training experiment (two independent noisy copies).

struct TrainSingleConfig {
    std::string method = "utb";  // utb | deformable
    double sigma_n = 0.3;
    std::uint64_t seed_train = 1;
    std::uint64_t seed_test = 2;
    TrainConfig train;
};

struct TrainSingleOutcome {
    TrainResult result;
    GrayImage noisy_train;
    GrayImage noisy_test;
    GrayImage denoised_train;
    GrayImage denoised_test;
};

TrainSingleOutcome run_train_single(const GrayImage& clean, const TrainSingleConfig& cfg);

// iteration,train_mse,test_mse rows for the recorded curves.
std::string curves_csv(const TrainResult& result);

// One summary line: see compare_csv_header() for the column order.
std::string summary_row(const TrainSingleConfig& cfg, const TrainResult& result);

// ---------------------------------------------------------------------------
// Grid comparison across methods / kernel sizes / noise levels.

struct CompareConfig {
    std::vector<std::string> methods{"deformable", "utb"};
    std::vector<int> ks{5, 11};
    std::vector<double> sigmas{0.3};
    TrainSingleConfig base;
};

std::string compare_csv_header();
// One row per (method, k, sigma); failed cells are marked and the run
// continues.
std::string run_compare(const GrayImage& clean, const CompareConfig& cfg);

// ---------------------------------------------------------------------------
// Dataset-scale training with an intermediate parameter head (experimental;
// no quality guarantees). Trains head weights by SGD on MSE.

struct TrainDatasetConfig {
    int k = 5;
    int epochs = 5;
    double lr = 1e-3;
    double sigma_n = 0.3;
    double eps_omega = 1.0;
    std::uint64_t seed = 1;
    PaddingMode pad = PaddingMode::Replicate;
    PolarVariant scheme = PolarVariant::Grid;
};

struct TrainDatasetResult {
    std::vector<KernelWeights> head;
    std::vector<double> epoch_mse;
};

TrainDatasetResult run_train_dataset(const std::vector<GrayImage>& clean_images,
                                     const TrainDatasetConfig& cfg);

// Metric field decoded from 5-channel head outputs.
MetricField field_from_head(const GrayImage& img, const std::vector<KernelWeights>& head,
                            const ParamHyper& hyper, PaddingMode pad);

}  // namespace finslerconv
