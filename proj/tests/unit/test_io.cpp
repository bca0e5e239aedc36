#include <doctest.h>

#include "birdseg/io/fmat.hpp"
#include "birdseg/io/png_io.hpp"
#include "birdseg/io/rle.hpp"
#include "birdseg/io/wav.hpp"
#include "birdseg/rng.hpp"
#include "testutil.hpp"

using namespace birdseg;
using testutil::TempDir;

TEST_CASE("wav write/read round trip within quantization") {
  TempDir tmp("wavrt");
  Rng rng(3);
  AudioClip clip;
  clip.sample_rate = 44100.0;
  clip.samples.resize(5000);
  for (double& s : clip.samples) s = rng.uniform(-0.9, 0.9);

  save_wav_16bit(tmp.str("c.wav"), clip);
  AudioClip back = load_wav(tmp.str("c.wav"));
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(back.sample_rate == clip.sample_rate);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 0.5001 / 32768.0);
  }
}

TEST_CASE("mask png round trip is lossless") {
  TempDir tmp("maskpng");
  Rng rng(9);
  BinaryMask mask(97, 131);  // non-multiple-of-8 width exercises bit packing
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.3;

  write_mask_png(tmp.str("m.png"), mask);
  CHECK(read_mask_png(tmp.str("m.png")) == mask);

  BinaryMask empty(16, 16), full(16, 16, true);
  write_mask_png(tmp.str("e.png"), empty);
  write_mask_png(tmp.str("f.png"), full);
  CHECK(read_mask_png(tmp.str("e.png")) == empty);
  CHECK(read_mask_png(tmp.str("f.png")) == full);

  CHECK_THROWS(read_mask_png(tmp.str("missing.png")));
}

TEST_CASE("gray png writes without error") {
  TempDir tmp("graypng");
  Matrix m(40, 60);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      m(r, c) = static_cast<double>(r + c) / 100.0;
    }
  }
  write_gray_png(tmp.str("g.png"), m);
  CHECK(std::filesystem::file_size(tmp.str("g.png")) > 0);
}

TEST_CASE("fmat round trip is bit exact") {
  TempDir tmp("fmat");
  Rng rng(5);
  Matrix m(33, 17);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e3;
  m(0, 0) = -0.0;
  m(1, 1) = 1e-300;

  write_fmat(tmp.str("m.fmat"), m);
  CHECK(read_fmat(tmp.str("m.fmat")) == m);

  testutil::write_file(tmp.str("bad.fmat"), {'X', 'Y'});
  CHECK_THROWS(read_fmat(tmp.str("bad.fmat")));
}

TEST_CASE("rle text masks round trip") {
  TempDir tmp("rle");
  Rng rng(13);
  BinaryMask mask(41, 67);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.25;

  const std::string text = mask_to_rle(mask);
  CHECK(text.rfind("BSRL 41 67", 0) == 0);
  CHECK(rle_to_mask(text) == mask);

  write_mask_rle(tmp.str("m.rle"), mask);
  CHECK(read_mask_rle(tmp.str("m.rle")) == mask);

  // Leading true pixel encodes as a zero-length false run.
  BinaryMask lead(2, 2);
  lead.set(0, 0, true);
  CHECK(mask_to_rle(lead) == "BSRL 2 2\n0 1 3\n");
  CHECK(rle_to_mask("BSRL 2 2\n0 1 3\n") == lead);

  BinaryMask empty(3, 3), full(3, 3, true);
  CHECK(rle_to_mask(mask_to_rle(empty)) == empty);
  CHECK(rle_to_mask(mask_to_rle(full)) == full);

  CHECK_THROWS(rle_to_mask("BSRL 2 2\n1 1\n"));       // runs do not cover
  CHECK_THROWS(rle_to_mask("BSRL 2 2\n9\n"));         // runs overflow
  CHECK_THROWS(rle_to_mask("nope"));
}

TEST_CASE("flip_rows round trips") {
  Rng rng(7);
  Matrix m(13, 9);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  CHECK(flip_rows(flip_rows(m)) == m);
  CHECK(flip_rows(m)(0, 3) == m(12, 3));

  BinaryMask mask(13, 9);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.5;
  CHECK(flip_rows(flip_rows(mask)) == mask);
}

TEST_CASE("mask resizing helpers") {
  BinaryMask m(8, 8);
  m.set(3, 3, true);

  // downsample_any marks exactly the cell whose footprint holds the pixel.
  BinaryMask down = downsample_any(m, 4, 4);
  CHECK(down.count_true() == 1);
  CHECK(down.get(1, 1));

  // resize_nearest maps each output cell to its source-center pixel.
  BinaryMask up = resize_nearest(down, 8, 8);
  CHECK(up.count_true() == 4);
  CHECK(up.get(2, 2));
  CHECK(up.get(3, 3));

  // Any-pooling never loses a set pixel's footprint.
  Rng rng(21);
  BinaryMask big(64, 100);
  for (std::size_t i = 0; i < big.size(); ++i) big.data()[i] = rng.uniform() < 0.05;
  BinaryMask small = downsample_any(big, 16, 25);
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 100; ++c) {
      if (big.get(r, c)) CHECK(small.get(r * 16 / 64, c * 25 / 100));
    }
  }
}
