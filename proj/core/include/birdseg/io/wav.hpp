#pragma once

#include <stdexcept>
#include <string>

#include "birdseg/audio.hpp"

namespace birdseg {

class WavError : public std::runtime_error {
 public:
  enum class Kind {
    unreadable,             // missing file or malformed RIFF structure
    unsupported_encoding,   // not 8/16/24-bit PCM or 32-bit float
    empty_audio,            // zero-length data chunk
  };

  WavError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads a RIFF little-endian PCM WAV (8/16/24-bit int or 32-bit float).
/// Multichannel input is averaged to mono; samples are normalized to [-1, 1].
AudioClip load_wav(const std::string& path);

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1] before quantizing.
void save_wav_16bit(const std::string& path, const AudioClip& clip);

}  // namespace birdseg
