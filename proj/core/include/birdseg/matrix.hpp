#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace birdseg {

/// Dense row-major matrix of doubles. Row 0 of a spectrogram is the lowest
/// frequency bin; image-oriented exports flip rows explicitly (see flip_rows).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  double max_value() const;
  double min_value() const;
  bool all_finite() const;

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Boolean matrix congruent to a spectrogram; true marks an active pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }

  bool get(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * cols_ + c] = v ? 1 : 0; }

  const std::uint8_t* data() const { return bits_.data(); }
  std::uint8_t* data() { return bits_.data(); }

  std::size_t count_true() const;
  bool any() const { return count_true() > 0; }
  /// True if every set pixel of this mask is also set in `other`.
  bool subset_of(const BinaryMask& other) const;

  bool same_shape(const BinaryMask& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Bilinear resampling on a corner-aligned grid: output corners sample input
/// corners exactly, so resizing to the same shape is the identity.
Matrix resize_bilinear(const Matrix& in, std::size_t out_rows, std::size_t out_cols);

/// Nearest-neighbor resampling (pixel-area convention). Used to bring coarse
/// predicted masks back to native spectrogram shape.
BinaryMask resize_nearest(const BinaryMask& in, std::size_t out_rows, std::size_t out_cols);

/// Downsample a mask so an output cell is true iff any source pixel in its
/// footprint is true. Footprints partition the source exactly.
BinaryMask downsample_any(const BinaryMask& in, std::size_t out_rows, std::size_t out_cols);

Matrix flip_rows(const Matrix& in);
BinaryMask flip_rows(const BinaryMask& in);

}  // namespace birdseg
