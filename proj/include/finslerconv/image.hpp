#pragma once

#include <cstdint>
#include <vector>

#include "finslerconv/vec2.hpp"

namespace finslerconv {

enum class PaddingMode { Periodic, Zero, Replicate };

// Grayscale raster. Pixel (row, col) has its center at integer coordinates;
// row grows downward. Intensities are nominally in [0,1] but never clamped.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int height, int width, double fill = 0.0);
    GrayImage(int height, int width, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * width_ + c]; }
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * width_ + c]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const GrayImage& o) const {
        return height_ == o.height_ && width_ == o.width_;
    }

private:
    int height_{0};
    int width_{0};
    std::vector<double> data_;
};

// Padded integer-pixel lookup.
double pixel_at(const GrayImage& img, int r, int c, PaddingMode pad);

// Bilinear interpolation at fractional (row, col). Exact at pixel centers.
double sample_bilinear(const GrayImage& img, double r, double c, PaddingMode pad);

// Value plus the spatial gradient of the bilinear interpolant, which is
// piecewise constant per unit cell (one-sided at cell boundaries).
struct BilinearSample {
    double value;
    double d_drow;
    double d_dcol;
};
BilinearSample sample_bilinear_grad(const GrayImage& img, double r, double c, PaddingMode pad);

struct VecField {
    int height{0};
    int width{0};
    std::vector<Vec2> v;

    VecField() = default;
    VecField(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w) {}
    const Vec2& at(int r, int c) const { return v[static_cast<std::size_t>(r) * width + c]; }
    Vec2& at(int r, int c) { return v[static_cast<std::size_t>(r) * width + c]; }
};

// 3x3 Sobel, normalized by 1/8 so a unit ramp has unit gradient.
// Component x differentiates along columns, y along rows.
VecField sobel_gradient(const GrayImage& img, PaddingMode pad);

// i.i.d. N(0, sigma^2) per pixel from the counter PRNG; no clamping.
GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed);

double mse(const GrayImage& a, const GrayImage& b);
// 10*log10(1/MSE) for unit-range images; +infinity when the images match.
double psnr(const GrayImage& a, const GrayImage& b);
// Normalized generalization gap (test - train) / train.
double gen_gap(double train_mse, double test_mse);

}  // namespace finslerconv
