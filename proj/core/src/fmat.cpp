#include "birdseg/io/fmat.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace birdseg {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

}  // namespace

void write_fmat(const std::string& path, const Matrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * m.size());
  out.insert(out.end(), {'F', 'M', 'A', 'T'});
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_fmat: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_fmat: write failed for " + path);
}

Matrix read_fmat(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_fmat: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "FMAT", 4) != 0)
    throw std::runtime_error("read_fmat: bad header in " + path);

  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  const std::size_t rows = u32(4), cols = u32(8);
  if (bytes.size() != 12 + 8 * rows * cols) throw std::runtime_error("read_fmat: size mismatch in " + path);

  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[12 + 8 * i + b]) << (8 * b);
    m.data()[i] = std::bit_cast<double>(v);
  }
  return m;
}

}  // namespace birdseg
