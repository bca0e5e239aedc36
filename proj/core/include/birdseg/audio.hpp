#pragma once

#include <vector>

namespace birdseg {

/// Mono audio, samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 0.0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

}  // namespace birdseg
