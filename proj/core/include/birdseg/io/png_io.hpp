#pragma once

#include <string>

#include "birdseg/matrix.hpp"

namespace birdseg {

/// 1-bit grayscale PNG; matrix rows are written as image rows top to bottom.
/// Callers exporting spectrogram masks flip rows first so row 0 becomes the
/// highest frequency (see flip_rows).
void write_mask_png(const std::string& path, const BinaryMask& mask);
BinaryMask read_mask_png(const std::string& path);

/// 8-bit grayscale PNG of values clamped to [0,1].
void write_gray_png(const std::string& path, const Matrix& values);

}  // namespace birdseg
