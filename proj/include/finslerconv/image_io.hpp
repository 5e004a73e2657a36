#pragma once

#include <string>

#include "finslerconv/image.hpp"

namespace finslerconv {

// Binary PGM (P5), 8- or 16-bit. Intensities map to [0,1] via maxval.
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path, int bit_depth = 16);

// Grayscale PNG, 8- or 16-bit.
GrayImage read_png_gray(const std::string& path);
void write_png_gray(const GrayImage& img, const std::string& path, int bit_depth = 16);

// Dispatch on extension (.pgm / .png).
GrayImage read_image(const std::string& path);
void write_image(const GrayImage& img, const std::string& path, int bit_depth = 16);

}  // namespace finslerconv
