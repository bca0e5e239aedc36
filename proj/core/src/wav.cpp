#include "birdseg/io/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace birdseg {

namespace {

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw WavError(WavError::Kind::unreadable, "cannot open " + path);

  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(WavError::Kind::unreadable, "not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    std::uint32_t chunk_len = read_u32(hdr + 4);
    const std::uint8_t* body = hdr + 8;
    if (pos + 8 + chunk_len > bytes.size()) {
      throw WavError(WavError::Kind::unreadable, "truncated chunk in " + path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw WavError(WavError::Kind::unreadable, "short fmt chunk in " + path);
      format = read_u16(body);
      channels = read_u16(body + 2);
      sample_rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format == kFormatExtensible && chunk_len >= 40) {
        format = read_u16(body + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
      have_data = true;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !have_data) {
    throw WavError(WavError::Kind::unreadable, "missing fmt or data chunk in " + path);
  }
  if (channels == 0 || sample_rate == 0) {
    throw WavError(WavError::Kind::unsupported_encoding, "bad channel count or sample rate in " + path);
  }

  const bool pcm_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24);
  const bool float_ok = format == kFormatFloat && bits == 32;
  if (!pcm_ok && !float_ok) {
    throw WavError(WavError::Kind::unsupported_encoding,
                   "unsupported encoding (format " + std::to_string(format) + ", " +
                       std::to_string(bits) + "-bit) in " + path);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw WavError(WavError::Kind::empty_audio, "zero-length audio in " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<double>(sample_rate);
  clip.samples.resize(n_frames);

  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    const std::uint8_t* frame = data + i * frame_bytes;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::uint8_t* s = frame + ch * bytes_per_sample;
      double v = 0.0;
      if (format == kFormatFloat) {
        float fv;
        std::memcpy(&fv, s, 4);
        v = static_cast<double>(fv);
      } else if (bits == 8) {
        v = (static_cast<double>(s[0]) - 128.0) / 128.0;  // 8-bit WAV is unsigned
      } else if (bits == 16) {
        std::int16_t iv = static_cast<std::int16_t>(s[0] | (s[1] << 8));
        v = static_cast<double>(iv) / 32768.0;
      } else {  // 24-bit
        std::int32_t iv = static_cast<std::int32_t>(s[0] | (s[1] << 8) | (s[2] << 16));
        if (iv & 0x800000) iv |= ~0xffffff;  // sign extend
        v = static_cast<double>(iv) / 8388608.0;
      }
      acc += v;
    }
    clip.samples[i] = std::clamp(acc / channels, -1.0, 1.0);
  }
  return clip;
}

void save_wav_16bit(const std::string& path, const AudioClip& clip) {
  if (clip.samples.empty()) throw std::invalid_argument("save_wav_16bit: empty clip");
  if (clip.sample_rate <= 0) throw std::invalid_argument("save_wav_16bit: sample_rate must be > 0");

  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(clip.sample_rate));

  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double s : clip.samples) {
    // Inverse of the reader's /32768 convention; +1.0 clamps to 32767.
    const long q = std::clamp(std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0), -32768L, 32767L);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_wav_16bit: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("save_wav_16bit: write failed for " + path);
}

}  // namespace birdseg
