#pragma once

#include "finslerconv/image.hpp"

namespace finslerconv {

// Deterministic piecewise-smooth test image: smooth ramps, a disk, a
// rectangle with corners, a diagonal bar, and two oscillatory texture
// patches. Every pixel is a closed-form function of (row, col).
GrayImage make_phantom(int height = 256, int width = 256);

}  // namespace finslerconv
