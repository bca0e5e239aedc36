#include "birdseg/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace birdseg {

double Matrix::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : data_) m = std::max(m, v);
  return m;
}

double Matrix::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : data_) m = std::min(m, v);
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::size_t BinaryMask::count_true() const {
  std::size_t n = 0;
  for (std::uint8_t b : bits_) n += b;
  return n;
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

Matrix resize_bilinear(const Matrix& in, std::size_t out_rows, std::size_t out_cols) {
  if (in.empty()) throw std::invalid_argument("resize_bilinear: empty input");
  if (out_rows < 1 || out_cols < 1) throw std::invalid_argument("resize_bilinear: output shape must be >= 1x1");

  const std::size_t ir = in.rows(), ic = in.cols();
  Matrix out(out_rows, out_cols);

  // Corner-aligned source coordinate for output index i of n samples over m
  // source samples; a single output sample takes the source center.
  auto src_coord = [](std::size_t i, std::size_t n, std::size_t m) -> double {
    if (n == 1) return 0.5 * static_cast<double>(m - 1);
    return static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(n - 1);
  };

  for (std::size_t r = 0; r < out_rows; ++r) {
    const double sr = src_coord(r, out_rows, ir);
    const std::size_t r0 = static_cast<std::size_t>(sr);
    const std::size_t r1 = std::min(r0 + 1, ir - 1);
    const double fr = sr - static_cast<double>(r0);
    for (std::size_t c = 0; c < out_cols; ++c) {
      const double sc = src_coord(c, out_cols, ic);
      const std::size_t c0 = static_cast<std::size_t>(sc);
      const std::size_t c1 = std::min(c0 + 1, ic - 1);
      const double fc = sc - static_cast<double>(c0);
      const double top = in(r0, c0) * (1.0 - fc) + in(r0, c1) * fc;
      const double bot = in(r1, c0) * (1.0 - fc) + in(r1, c1) * fc;
      out(r, c) = top * (1.0 - fr) + bot * fr;
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& in, std::size_t out_rows, std::size_t out_cols) {
  if (in.empty()) throw std::invalid_argument("resize_nearest: empty input");
  if (out_rows < 1 || out_cols < 1) throw std::invalid_argument("resize_nearest: output shape must be >= 1x1");

  BinaryMask out(out_rows, out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    std::size_t sr = static_cast<std::size_t>((static_cast<double>(r) + 0.5) *
                                              static_cast<double>(in.rows()) / static_cast<double>(out_rows));
    sr = std::min(sr, in.rows() - 1);
    for (std::size_t c = 0; c < out_cols; ++c) {
      std::size_t sc = static_cast<std::size_t>((static_cast<double>(c) + 0.5) *
                                                static_cast<double>(in.cols()) / static_cast<double>(out_cols));
      sc = std::min(sc, in.cols() - 1);
      out.set(r, c, in.get(sr, sc));
    }
  }
  return out;
}

BinaryMask downsample_any(const BinaryMask& in, std::size_t out_rows, std::size_t out_cols) {
  if (in.empty()) throw std::invalid_argument("downsample_any: empty input");
  if (out_rows < 1 || out_rows > in.rows() || out_cols < 1 || out_cols > in.cols())
    throw std::invalid_argument("downsample_any: output shape must be >= 1x1 and <= input shape");

  BinaryMask out(out_rows, out_cols);
  auto lo = [](std::size_t i, std::size_t n, std::size_t m) {
    return i * m / n;
  };
  for (std::size_t r = 0; r < out_rows; ++r) {
    const std::size_t r0 = lo(r, out_rows, in.rows());
    const std::size_t r1 = lo(r + 1, out_rows, in.rows());
    for (std::size_t c = 0; c < out_cols; ++c) {
      const std::size_t c0 = lo(c, out_cols, in.cols());
      const std::size_t c1 = lo(c + 1, out_cols, in.cols());
      bool any = false;
      for (std::size_t rr = r0; rr < r1 && !any; ++rr) {
        for (std::size_t cc = c0; cc < c1; ++cc) {
          if (in.get(rr, cc)) {
            any = true;
            break;
          }
        }
      }
      out.set(r, c, any);
    }
  }
  return out;
}

Matrix flip_rows(const Matrix& in) {
  Matrix out(in.rows(), in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* src = in.row(in.rows() - 1 - r);
    std::copy(src, src + in.cols(), out.row(r));
  }
  return out;
}

BinaryMask flip_rows(const BinaryMask& in) {
  BinaryMask out(in.rows(), in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    for (std::size_t c = 0; c < in.cols(); ++c) {
      out.set(r, c, in.get(in.rows() - 1 - r, c));
    }
  }
  return out;
}

}  // namespace birdseg
