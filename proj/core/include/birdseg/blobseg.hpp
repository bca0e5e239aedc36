#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "birdseg/dsp.hpp"
#include "birdseg/matrix.hpp"
#include "birdseg/metrics.hpp"

namespace birdseg::blobseg {

/// Flat structuring element with odd width and height, origin at center.
struct StructuringElement {
  BinaryMask bits;

  static StructuringElement full(std::size_t height, std::size_t width);
  bool valid() const;
};

/// One 8-connected component of a mask with its tight bounding box.
struct Blob {
  std::vector<std::pair<int, int>> pixels;  // (row, col)
  metrics::BBox bbox;

  std::size_t area() const { return pixels.size(); }
};

// Defaults tuned on the synthetic corpus at 256x624: the Hamming window's
// flat -43 dB sidelobe pedestal puts a skirt around every strong tone, and in
// colored noise the per-row median sits below it, so the clipping factor must
// clear the skirt. Dilation stays small to keep blob boxes near the events.
struct SegParams {
  double factor = 5.0;          // median clipping factor
  std::size_t close_size = 3;   // full square closing element
  std::size_t dilate_size = 3;  // full square dilation element
  std::size_t median_k = 5;     // majority filter window
  std::size_t min_area = 20;    // blobs below this pixel count are dropped
};

/// bit(i,j) = values(i,j) > factor * median(row i) AND > factor * median(col j).
/// Median of an even-length sequence is the mean of the two central elements.
/// Operates on linear magnitudes.
BinaryMask median_clip(const dsp::Spectrogram& spec, double factor);

/// Minkowski dilation; out-of-bounds neighbors read as false.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);

/// Erosion; out-of-bounds neighbors read as true, so closing stays
/// border-neutral.
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);

/// Dilation followed by erosion.
BinaryMask morph_close(const BinaryMask& mask, const StructuringElement& se);

/// Each output bit is the majority vote of the k x k neighborhood
/// (out-of-bounds counted false). k must be odd.
BinaryMask median_filter(const BinaryMask& mask, std::size_t k);

/// 8-connected components, sorted by (bbox.t0, bbox.f0).
std::vector<Blob> connected_components(const BinaryMask& mask);

/// Full blind segmentation chain: median clipping, closing, dilation, median
/// filtering, then small-blob removal. The returned mask is the union of the
/// surviving blobs.
std::pair<BinaryMask, std::vector<Blob>> segment(const dsp::Spectrogram& spec,
                                                 const SegParams& params = {});

}  // namespace birdseg::blobseg
