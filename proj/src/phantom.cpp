#include "finslerconv/phantom.hpp"

#include <algorithm>
#include <cmath>

namespace finslerconv {

GrayImage make_phantom(int height, int width) {
    GrayImage img(height, width);
    for (int r = 0; r < height; ++r) {
        const double v = static_cast<double>(r) / (height - 1);
        for (int c = 0; c < width; ++c) {
            const double u = static_cast<double>(c) / (width - 1);

            // Smooth background: linear ramp plus a broad bump.
            double val = 0.30 + 0.26 * u + 0.10 * v + 0.08 * std::sin(2.0 * M_PI * u) *
                                                          std::sin(2.0 * M_PI * v);

            // Striped block: long straight vertical edges (period ~16 px).
            if (u > 0.04 && u < 0.30 && v > 0.05 && v < 0.42) {
                const double phase = std::fmod(u * width, 16.0);
                val = phase < 8.0 ? 0.18 : 0.74;
            }

            // Bright disk.
            const double du = u - 0.42;
            const double dv = v - 0.24;
            if (du * du + dv * dv < 0.115 * 0.115) val = 0.88;

            // Dark rectangle with sharp corners and long edges.
            if (u > 0.56 && u < 0.93 && v > 0.07 && v < 0.36) val = 0.12;

            // Thick high-contrast diagonal band.
            const double diag = (u + v) * 0.70710678118654752;
            if (diag > 0.86 && diag < 0.97) val = 0.82;

            // Fine diagonal stripes (wavelength ~5 px at 256^2).
            if (u > 0.52 && u < 0.95 && v > 0.44 && v < 0.56) {
                val = 0.50 + 0.15 * std::sin(2.0 * M_PI * 0.71 * (u * width + v * height) / 5.0);
            }

            // Oriented sinusoidal texture patch (wavelength ~8 px at 256^2).
            if (u > 0.06 && u < 0.46 && v > 0.56 && v < 0.94) {
                val = 0.45 + 0.22 * std::sin(2.0 * M_PI * (u * width) / 8.0) *
                                 std::cos(2.0 * M_PI * (v * height) / 11.0);
            }

            // Radial texture patch.
            const double ru = u - 0.72;
            const double rv = v - 0.74;
            const double rad = std::sqrt(ru * ru + rv * rv);
            if (rad < 0.18) {
                val = 0.55 + 0.15 * std::sin(2.0 * M_PI * rad * width / 9.0);
            }

            img.at(r, c) = std::clamp(val, 0.02, 0.98);
        }
    }
    return img;
}

}  // namespace finslerconv
