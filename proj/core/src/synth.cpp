#include "birdseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "birdseg/dsp.hpp"
#include "birdseg/io/png_io.hpp"
#include "birdseg/io/wav.hpp"
#include "birdseg/rng.hpp"

namespace birdseg::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kWindow = 512;
constexpr std::size_t kHop = 706;
constexpr std::size_t kBins = kWindow / 2;
constexpr double kFadeSeconds = 0.010;
constexpr double kWindCutoffHz = 500.0;

void validate_scene(const SceneSpec& spec) {
  if (!(spec.duration > 0.0)) throw std::invalid_argument("scene: duration must be > 0");
  if (!(spec.sample_rate > 0.0)) throw std::invalid_argument("scene: sample_rate must be > 0");
  if (!std::isfinite(spec.noise.snr_db)) throw std::invalid_argument("scene: snr_db must be finite");
  for (const ChirpSpec& c : spec.events) {
    if (!(c.t_start >= 0.0 && c.t_start < c.t_end && c.t_end <= spec.duration))
      throw std::invalid_argument("chirp: time support must lie within the scene");
    if (!(c.f_start > 0.0 && c.f_start < spec.sample_rate / 2.0) ||
        !(c.f_end > 0.0 && c.f_end < spec.sample_rate / 2.0))
      throw std::invalid_argument("chirp: frequencies must lie in (0, sample_rate/2)");
    if (!(c.amplitude >= 0.0 && c.amplitude <= 1.0))
      throw std::invalid_argument("chirp: amplitude must be in [0,1]");
  }
}

std::vector<double> make_noise(Rng& rng, std::size_t n, NoiseKind kind, double sample_rate) {
  std::vector<double> noise(n);
  switch (kind) {
    case NoiseKind::white:
      for (double& v : noise) v = rng.normal();
      break;
    case NoiseKind::pink: {
      // Kellet's pole approximation of a 1/f spectrum.
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (double& v : noise) {
        const double w = rng.normal();
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362) * 0.11;
        b6 = w * 0.115926;
      }
      break;
    }
    case NoiseKind::wind_lowpass: {
      const double a = std::exp(-2.0 * kPi * kWindCutoffHz / sample_rate);
      double y = 0.0;
      for (double& v : noise) {
        y = a * y + (1.0 - a) * rng.normal();
        v = y;
      }
      break;
    }
  }
  return noise;
}

double rms(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi <= lo) return 0.0;
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) acc += v[i] * v[i];
  return std::sqrt(acc / static_cast<double>(hi - lo));
}

}  // namespace

double chirp_frequency(const ChirpSpec& chirp, double u) {
  switch (chirp.shape) {
    case ChirpShape::linear_sweep:
      return chirp.f_start + (chirp.f_end - chirp.f_start) * u;
    case ChirpShape::sinusoidal_fm: {
      const double mid = 0.5 * (chirp.f_start + chirp.f_end);
      const double half = 0.5 * std::abs(chirp.f_end - chirp.f_start);
      return mid - half * std::cos(2.0 * kPi * u);
    }
  }
  return chirp.f_start;
}

std::pair<AudioClip, GroundTruth> generate_scene(const SceneSpec& spec) {
  validate_scene(spec);

  const double sr = spec.sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration * sr));
  std::vector<double> signal(n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> supports;

  for (const ChirpSpec& chirp : spec.events) {
    const std::size_t s0 = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(chirp.t_start * sr)));
    const std::size_t s1 = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(chirp.t_end * sr)));
    if (s1 <= s0 + 1) continue;
    const std::size_t len = s1 - s0;
    const std::size_t fade = std::min<std::size_t>(static_cast<std::size_t>(kFadeSeconds * sr), len / 2);
    supports.push_back({s0, s1});

    double phase = 0.0;
    for (std::size_t s = s0; s < s1; ++s) {
      const double u = static_cast<double>(s - s0) / static_cast<double>(len);
      phase += 2.0 * kPi * chirp_frequency(chirp, u) / sr;
      double env = 1.0;
      if (fade > 0) {
        const std::size_t into = s - s0;
        const std::size_t from_end = s1 - 1 - s;
        if (into < fade) env = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(into) / static_cast<double>(fade));
        else if (from_end < fade) env = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(from_end) / static_cast<double>(fade));
      }
      signal[s] += chirp.amplitude * env * std::sin(phase);
    }
  }

  // Exact annotation on the analysis grid: a frame belongs to a chirp iff its
  // center sample falls inside the chirp's support.
  GroundTruth truth;
  const std::size_t n_frames = dsp::frame_count(n, kWindow, kHop);
  truth.mask = BinaryMask(kBins, n_frames);
  for (const ChirpSpec& chirp : spec.events) {
    const std::size_t s0 = static_cast<std::size_t>(std::llround(chirp.t_start * sr));
    const std::size_t s1 = static_cast<std::size_t>(std::llround(chirp.t_end * sr));
    if (s1 <= s0 + 1) continue;
    bool any = false;
    metrics::BBox box;
    for (std::size_t j = 0; j < n_frames; ++j) {
      const std::size_t center = dsp::frame_center_sample(j, kWindow, kHop);
      if (center < s0 || center >= s1) continue;
      const double u = static_cast<double>(center - s0) / static_cast<double>(s1 - s0);
      const double f = chirp_frequency(chirp, u);
      const long long bin = std::llround(f * static_cast<double>(kWindow) / sr);
      const int b_lo = static_cast<int>(std::max<long long>(0, bin - 1));
      const int b_hi = static_cast<int>(std::min<long long>(kBins - 1, bin + 1));
      for (int b = b_lo; b <= b_hi; ++b) truth.mask.set(static_cast<std::size_t>(b), j, true);
      if (!any) {
        box = {static_cast<int>(j), static_cast<int>(j), b_lo, b_hi};
        any = true;
      } else {
        box.t1 = static_cast<int>(j);
        box.f0 = std::min(box.f0, b_lo);
        box.f1 = std::max(box.f1, b_hi);
      }
    }
    if (any) truth.boxes.push_back(box);
  }
  truth.label = truth.boxes.empty() ? 0 : 1;
  std::sort(truth.boxes.begin(), truth.boxes.end(), [](const metrics::BBox& a, const metrics::BBox& b) {
    if (a.t0 != b.t0) return a.t0 < b.t0;
    return a.f0 < b.f0;
  });

  Rng rng(spec.seed);
  std::vector<double> noise = make_noise(rng, n, spec.noise.kind, sr);
  const double noise_rms_raw = rms(noise, 0, n);
  double gain = 0.0;
  if (!supports.empty()) {
    double sig_energy = 0.0;
    std::size_t sig_count = 0;
    for (const auto& [s0, s1] : supports) {
      for (std::size_t s = s0; s < s1; ++s) sig_energy += signal[s] * signal[s];
      sig_count += s1 - s0;
    }
    const double sig_rms = sig_count ? std::sqrt(sig_energy / static_cast<double>(sig_count)) : 0.0;
    gain = sig_rms / (noise_rms_raw * std::pow(10.0, spec.noise.snr_db / 20.0));
  } else {
    // Noise-only scenes: floor level drawn from the same range the SNR rule
    // produces for typical positives, so level alone does not separate classes.
    gain = rng.uniform(0.02, 0.06) / noise_rms_raw;
  }

  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = signal[i] + gain * noise[i];
    peak = std::max(peak, std::abs(clip.samples[i]));
  }
  if (peak > 0.999) {
    const double scale = 0.999 / peak;
    for (double& v : clip.samples) v *= scale;
  }
  return {std::move(clip), std::move(truth)};
}

SceneSpec random_scene_spec(std::uint64_t scene_seed, int label, double snr_db, NoiseKind kind) {
  SceneSpec spec;
  spec.seed = scene_seed;
  spec.noise.kind = kind;
  spec.noise.snr_db = snr_db;

  if (label) {
    // Event parameters come from a derived stream so the noise samples drawn
    // in generate_scene stay aligned with the scene seed.
    Rng rng(Rng::mix(scene_seed, 0x5eed));
    const std::size_t n_events = 1 + rng.uniform_int(4);
    for (std::size_t e = 0; e < n_events; ++e) {
      ChirpSpec chirp;
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double dur = rng.uniform(0.1, 1.0);
        const double t0 = rng.uniform(0.2, spec.duration - 0.2 - dur);
        bool clear = true;
        for (const ChirpSpec& other : spec.events) {
          if (t0 < other.t_end + 0.15 && other.t_start < t0 + dur + 0.15) {
            clear = false;
            break;
          }
        }
        if (!clear) continue;
        chirp.t_start = t0;
        chirp.t_end = t0 + dur;
        chirp.shape = rng.uniform_int(2) ? ChirpShape::sinusoidal_fm : ChirpShape::linear_sweep;
        chirp.f_start = rng.uniform(1000.0, 8000.0);
        // Cap the sweep rate so the track advances at most ~2.5 bins per
        // analysis frame; the warble's peak rate is pi/dur times its span.
        const double max_span = chirp.shape == ChirpShape::linear_sweep
                                    ? std::min(2500.0, 12000.0 * dur)
                                    : std::min(2500.0, 4000.0 * dur);
        const double span = rng.uniform(200.0, std::max(220.0, max_span)) *
                            (rng.uniform_int(2) ? 1.0 : -1.0);
        chirp.f_end = std::clamp(chirp.f_start + span, 1000.0, 8000.0);
        chirp.amplitude = rng.uniform(0.3, 0.9);
        spec.events.push_back(chirp);
        break;
      }
    }
  }
  return spec;
}

std::string scene_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04zu", index);
  return buf;
}

std::vector<ManifestRow> generate_corpus(const CorpusParams& params,
                                         const std::filesystem::path& out_dir) {
  if (params.n_scenes < 1) throw std::invalid_argument("corpus: n_scenes must be >= 1");
  if (!(params.pos_fraction >= 0.0 && params.pos_fraction <= 1.0))
    throw std::invalid_argument("corpus: pos_fraction must be in [0,1]");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "audio", ec);
  fs::create_directories(out_dir / "masks", ec);
  fs::create_directories(out_dir / "boxes", ec);
  if (!fs::is_directory(out_dir / "audio") || !fs::is_directory(out_dir / "masks") ||
      !fs::is_directory(out_dir / "boxes")) {
    throw std::runtime_error("corpus: cannot create output directories under " + out_dir.string());
  }

  const std::size_t n_pos = static_cast<std::size_t>(std::llround(
      params.pos_fraction * static_cast<double>(params.n_scenes)));
  const NoiseKind kinds[3] = {NoiseKind::white, NoiseKind::wind_lowpass, NoiseKind::pink};

  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < params.n_scenes; ++i) {
    const int label = i < n_pos ? 1 : 0;
    const SceneSpec spec = random_scene_spec(Rng::mix(params.seed, i), label, params.snr_db, kinds[i % 3]);
    auto [clip, truth] = generate_scene(spec);

    const std::string id = scene_id(i);
    save_wav_16bit((out_dir / "audio" / (id + ".wav")).string(), clip);
    write_mask_png((out_dir / "masks" / (id + ".png")).string(), flip_rows(truth.mask));

    nlohmann::json boxes = nlohmann::json::array();
    for (const metrics::BBox& b : truth.boxes) {
      boxes.push_back({{"t0", b.t0}, {"t1", b.t1}, {"f0", b.f0}, {"f1", b.f1}});
    }
    std::ofstream bf(out_dir / "boxes" / (id + ".json"), std::ios::trunc);
    if (!bf) throw std::runtime_error("corpus: cannot write boxes for " + id);
    bf << boxes.dump(2) << "\n";

    rows.push_back({id, "audio/" + id + ".wav", label});
  }

  std::ofstream mf(out_dir / "manifest.csv", std::ios::trunc);
  if (!mf) throw std::runtime_error("corpus: cannot write manifest.csv");
  mf << "id,path,label\n";
  for (const ManifestRow& row : rows) mf << row.id << ',' << row.path << ',' << row.label << '\n';
  return rows;
}

}  // namespace birdseg::synth
