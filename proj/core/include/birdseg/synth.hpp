#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "birdseg/audio.hpp"
#include "birdseg/matrix.hpp"
#include "birdseg/metrics.hpp"

namespace birdseg::synth {

enum class ChirpShape {
  linear_sweep,    // instantaneous frequency sweeps f_start -> f_end linearly
  sinusoidal_fm,   // one-cycle warble between min and max of (f_start, f_end)
};

struct ChirpSpec {
  double t_start = 0.0;   // seconds
  double t_end = 0.0;
  double f_start = 0.0;   // Hz
  double f_end = 0.0;
  double amplitude = 0.5; // [0,1]
  ChirpShape shape = ChirpShape::linear_sweep;
};

enum class NoiseKind { white, pink, wind_lowpass };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::white;
  double snr_db = 20.0;  // signal RMS over event support vs full-clip noise RMS
};

struct SceneSpec {
  double duration = 10.0;
  double sample_rate = 44100.0;
  std::vector<ChirpSpec> events;
  NoiseSpec noise;
  std::uint64_t seed = 0;
};

/// Exact annotation of a generated scene at the default STFT grid
/// (window 512, hop 706): the mask marks bins within +-1 of each chirp's
/// instantaneous-frequency track, boxes are per-event tight hulls, and
/// label = 1 iff any event lands on the frame grid.
struct GroundTruth {
  BinaryMask mask;
  std::vector<metrics::BBox> boxes;
  int label = 0;
};

/// Instantaneous frequency of a chirp at normalized time u in [0,1].
double chirp_frequency(const ChirpSpec& chirp, double u);

std::pair<AudioClip, GroundTruth> generate_scene(const SceneSpec& spec);

/// Randomized scene recipe used by corpus generation: positive scenes carry
/// 1-4 non-overlapping chirps (0.1-1.0 s, 1-8 kHz); negative scenes are
/// noise only.
SceneSpec random_scene_spec(std::uint64_t scene_seed, int label, double snr_db, NoiseKind kind);

struct CorpusParams {
  std::size_t n_scenes = 0;
  double pos_fraction = 0.5;
  std::uint64_t seed = 0;
  double snr_db = 20.0;
};

struct ManifestRow {
  std::string id;
  std::string path;  // wav path relative to the corpus root
  int label = 0;
};

/// Writes audio/<id>.wav, masks/<id>.png (image-oriented 1-bit PNG),
/// boxes/<id>.json and manifest.csv under out_dir. Positive scenes come
/// first; noise kinds cycle white/wind/pink by index. Deterministic for a
/// fixed seed: per-scene seeds derive from the master seed.
std::vector<ManifestRow> generate_corpus(const CorpusParams& params,
                                         const std::filesystem::path& out_dir);

std::string scene_id(std::size_t index);

}  // namespace birdseg::synth
