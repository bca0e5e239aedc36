#pragma once

#include <string>

#include "birdseg/matrix.hpp"

namespace birdseg {

/// Run-length encoding of a mask over row-major order:
///   BSRL <rows> <cols>
///   <run lengths, space separated, alternating false/true, starting false>
/// Runs sum to rows*cols; a leading true pixel is encoded as a 0 false-run.
std::string mask_to_rle(const BinaryMask& mask);
BinaryMask rle_to_mask(const std::string& text);

void write_mask_rle(const std::string& path, const BinaryMask& mask);
BinaryMask read_mask_rle(const std::string& path);

}  // namespace birdseg
