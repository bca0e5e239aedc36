#pragma once

#include <string>

#include "birdseg/matrix.hpp"

namespace birdseg {

/// Portable float matrix file: "FMAT" magic, u32 rows, u32 cols, then
/// row-major little-endian 64-bit floats.
void write_fmat(const std::string& path, const Matrix& m);
Matrix read_fmat(const std::string& path);

}  // namespace birdseg
