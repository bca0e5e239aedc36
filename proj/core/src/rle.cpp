#include "birdseg/io/rle.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace birdseg {

std::string mask_to_rle(const BinaryMask& mask) {
  if (mask.empty()) throw std::invalid_argument("mask_to_rle: empty mask");
  std::ostringstream out;
  out << "BSRL " << mask.rows() << ' ' << mask.cols() << '\n';

  bool current = false;
  std::size_t run = 0;
  bool first = true;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool v = mask.data()[i] != 0;
    if (v == current) {
      ++run;
    } else {
      out << (first ? "" : " ") << run;
      first = false;
      current = v;
      run = 1;
    }
  }
  out << (first ? "" : " ") << run << '\n';
  return out.str();
}

BinaryMask rle_to_mask(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  std::size_t rows = 0, cols = 0;
  if (!(in >> magic >> rows >> cols) || magic != "BSRL" || rows == 0 || cols == 0)
    throw std::runtime_error("rle_to_mask: bad header");

  BinaryMask mask(rows, cols);
  std::size_t pos = 0;
  bool current = false;
  std::size_t run = 0;
  while (in >> run) {
    if (pos + run > mask.size()) throw std::runtime_error("rle_to_mask: runs exceed mask size");
    if (current) {
      for (std::size_t i = 0; i < run; ++i) mask.data()[pos + i] = 1;
    }
    pos += run;
    current = !current;
  }
  if (pos != mask.size()) throw std::runtime_error("rle_to_mask: runs do not cover the mask");
  return mask;
}

void write_mask_rle(const std::string& path, const BinaryMask& mask) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_mask_rle: cannot open " + path);
  f << mask_to_rle(mask);
  if (!f) throw std::runtime_error("write_mask_rle: write failed for " + path);
}

BinaryMask read_mask_rle(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_mask_rle: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return rle_to_mask(text);
}

}  // namespace birdseg
