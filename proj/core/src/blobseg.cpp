#include "birdseg/blobseg.hpp"

#include <algorithm>
#include <stdexcept>

namespace birdseg::blobseg {

namespace {

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

StructuringElement StructuringElement::full(std::size_t height, std::size_t width) {
  if (height % 2 == 0 || width % 2 == 0 || height == 0 || width == 0)
    throw std::invalid_argument("structuring element: dimensions must be odd and positive");
  return {BinaryMask(height, width, true)};
}

bool StructuringElement::valid() const {
  return !bits.empty() && bits.rows() % 2 == 1 && bits.cols() % 2 == 1 &&
         bits.get(bits.rows() / 2, bits.cols() / 2);
}

BinaryMask median_clip(const dsp::Spectrogram& spec, double factor) {
  if (factor <= 0.0) throw std::invalid_argument("median_clip: factor must be > 0");
  if (spec.scale != dsp::Scale::linear)
    throw std::invalid_argument("median_clip: spectrogram must be linear scale");

  const Matrix& m = spec.values;
  const std::size_t rows = m.rows(), cols = m.cols();

  std::vector<double> row_thresh(rows), col_thresh(cols);
  std::vector<double> buf;
  for (std::size_t r = 0; r < rows; ++r) {
    buf.assign(m.row(r), m.row(r) + cols);
    row_thresh[r] = factor * median_of(buf);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    buf.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) buf[r] = m(r, c);
    col_thresh[c] = factor * median_of(buf);
  }

  BinaryMask out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = m(r, c);
      out.set(r, c, v > row_thresh[r] && v > col_thresh[c]);
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  if (!se.valid()) throw std::invalid_argument("dilate: invalid structuring element");
  const int rows = static_cast<int>(mask.rows()), cols = static_cast<int>(mask.cols());
  const int oh = static_cast<int>(se.bits.rows()) / 2, ow = static_cast<int>(se.bits.cols()) / 2;

  BinaryMask out(mask.rows(), mask.cols());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!mask.get(r, c)) continue;
      for (int dr = -oh; dr <= oh; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -ow; dc <= ow; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= cols) continue;
          if (se.bits.get(dr + oh, dc + ow)) out.set(rr, cc, true);
        }
      }
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  if (!se.valid()) throw std::invalid_argument("erode: invalid structuring element");
  const int rows = static_cast<int>(mask.rows()), cols = static_cast<int>(mask.cols());
  const int oh = static_cast<int>(se.bits.rows()) / 2, ow = static_cast<int>(se.bits.cols()) / 2;

  BinaryMask out(mask.rows(), mask.cols());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      bool keep = true;
      for (int dr = -oh; dr <= oh && keep; ++dr) {
        for (int dc = -ow; dc <= ow; ++dc) {
          if (!se.bits.get(dr + oh, dc + ow)) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;  // border reads true
          if (!mask.get(rr, cc)) {
            keep = false;
            break;
          }
        }
      }
      out.set(r, c, keep);
    }
  }
  return out;
}

BinaryMask morph_close(const BinaryMask& mask, const StructuringElement& se) {
  return erode(dilate(mask, se), se);
}

BinaryMask median_filter(const BinaryMask& mask, std::size_t k) {
  if (k % 2 == 0 || k == 0) throw std::invalid_argument("median_filter: k must be odd and >= 1");
  const int rows = static_cast<int>(mask.rows()), cols = static_cast<int>(mask.cols());
  const int h = static_cast<int>(k) / 2;
  const std::size_t majority = (k * k) / 2 + 1;

  // Column sums over a sliding row band keep this O(rows*cols*k).
  BinaryMask out(mask.rows(), mask.cols());
  std::vector<std::size_t> col_sum(mask.cols(), 0);
  for (int r = 0; r < rows; ++r) {
    if (r == 0) {
      for (int rr = 0; rr <= std::min(h, rows - 1); ++rr) {
        for (int c = 0; c < cols; ++c) col_sum[c] += mask.get(rr, c);
      }
    } else {
      const int drop = r - 1 - h;
      if (drop >= 0) {
        for (int c = 0; c < cols; ++c) col_sum[c] -= mask.get(drop, c);
      }
      const int add = r + h;
      if (add < rows) {
        for (int c = 0; c < cols; ++c) col_sum[c] += mask.get(add, c);
      }
    }
    std::size_t window = 0;
    for (int cc = 0; cc <= std::min(h, cols - 1); ++cc) window += col_sum[cc];
    for (int c = 0; c < cols; ++c) {
      if (c > 0) {
        const int drop = c - 1 - h;
        if (drop >= 0) window -= col_sum[drop];
        const int add = c + h;
        if (add < cols) window += col_sum[add];
      }
      out.set(r, c, window >= majority);
    }
  }
  return out;
}

std::vector<Blob> connected_components(const BinaryMask& mask) {
  const int rows = static_cast<int>(mask.rows()), cols = static_cast<int>(mask.cols());
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<Blob> blobs;
  std::vector<std::pair<int, int>> stack;

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!mask.get(r, c) || seen[r * cols + c]) continue;
      Blob blob;
      blob.bbox = {c, c, r, r};
      stack.push_back({r, c});
      seen[r * cols + c] = 1;
      while (!stack.empty()) {
        auto [pr, pc] = stack.back();
        stack.pop_back();
        blob.pixels.push_back({pr, pc});
        blob.bbox.t0 = std::min(blob.bbox.t0, pc);
        blob.bbox.t1 = std::max(blob.bbox.t1, pc);
        blob.bbox.f0 = std::min(blob.bbox.f0, pr);
        blob.bbox.f1 = std::max(blob.bbox.f1, pr);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = pr + dr, cc = pc + dc;
            if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
            if (!mask.get(rr, cc) || seen[rr * cols + cc]) continue;
            seen[rr * cols + cc] = 1;
            stack.push_back({rr, cc});
          }
        }
      }
      blobs.push_back(std::move(blob));
    }
  }
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.bbox.t0 != b.bbox.t0) return a.bbox.t0 < b.bbox.t0;
    return a.bbox.f0 < b.bbox.f0;
  });
  return blobs;
}

std::pair<BinaryMask, std::vector<Blob>> segment(const dsp::Spectrogram& spec, const SegParams& params) {
  BinaryMask mask = median_clip(spec, params.factor);
  mask = morph_close(mask, StructuringElement::full(params.close_size, params.close_size));
  mask = dilate(mask, StructuringElement::full(params.dilate_size, params.dilate_size));
  mask = median_filter(mask, params.median_k);

  std::vector<Blob> blobs = connected_components(mask);
  std::erase_if(blobs, [&](const Blob& b) { return b.area() < params.min_area; });

  BinaryMask final_mask(mask.rows(), mask.cols());
  for (const Blob& b : blobs) {
    for (const auto& [r, c] : b.pixels) final_mask.set(r, c, true);
  }
  return {std::move(final_mask), std::move(blobs)};
}

}  // namespace birdseg::blobseg
