#include "birdseg/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "birdseg/io/png_io.hpp"
#include "birdseg/io/wav.hpp"
#include "birdseg/rng.hpp"

namespace birdseg::pipeline {

nnet::Tensor featurize(const AudioClip& clip, const dsp::StftParams& stft, std::size_t hw) {
  // The canonical chain (log scale, row mean removal, fixed scaling) lives in
  // net_input_from_spectrogram so predictions featurize exactly like training.
  dsp::StftParams params = stft;
  params.scale = dsp::Scale::log_db;
  return nnet::net_input_from_spectrogram(dsp::stft_spectrogram(clip, params), hw);
}

nnet::Tensor mask_target(const BinaryMask& native, std::size_t hw) {
  const BinaryMask coarse = downsample_any(native, hw, hw);
  nnet::Tensor t({1, hw, hw});
  for (std::size_t r = 0; r < hw; ++r) {
    for (std::size_t c = 0; c < hw; ++c) t.at(0, r, c) = coarse.get(r, c) ? 1.0 : 0.0;
  }
  return t;
}

std::vector<synth::ManifestRow> read_manifest(const std::filesystem::path& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("read_manifest: cannot open " + csv_path.string());

  std::vector<synth::ManifestRow> rows;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("read_manifest: empty file " + csv_path.string());
  if (line != "id,path,label") throw std::runtime_error("read_manifest: unexpected header: " + line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    synth::ManifestRow r;
    std::string label;
    if (!std::getline(row, r.id, ',') || !std::getline(row, r.path, ',') || !std::getline(row, label))
      throw std::runtime_error("read_manifest: malformed row: " + line);
    r.label = std::stoi(label);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CorpusItem> load_corpus(const std::filesystem::path& dir, const dsp::StftParams& stft,
                                    std::size_t hw) {
  const auto rows = read_manifest(dir / "manifest.csv");
  std::vector<CorpusItem> items;
  items.reserve(rows.size());
  for (const synth::ManifestRow& row : rows) {
    CorpusItem item;
    item.id = row.id;
    item.label = row.label;
    item.input = featurize(load_wav((dir / row.path).string()), stft, hw);

    // Mask PNGs are image-oriented; flip back to bin order (row 0 = lowest).
    item.native_mask = flip_rows(read_mask_png((dir / "masks" / (row.id + ".png")).string()));
    item.target = mask_target(item.native_mask, hw);

    std::ifstream bf(dir / "boxes" / (row.id + ".json"));
    if (!bf) throw std::runtime_error("load_corpus: missing boxes for " + row.id);
    nlohmann::json boxes = nlohmann::json::parse(bf);
    for (const auto& b : boxes) {
      item.boxes.push_back({b.at("t0").get<int>(), b.at("t1").get<int>(), b.at("f0").get<int>(),
                            b.at("f1").get<int>()});
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<CorpusItem> synth_corpus(const synth::CorpusParams& params,
                                     const dsp::StftParams& stft, std::size_t hw) {
  if (params.n_scenes < 1) throw std::invalid_argument("synth_corpus: n_scenes must be >= 1");
  const std::size_t n_pos = static_cast<std::size_t>(
      std::llround(params.pos_fraction * static_cast<double>(params.n_scenes)));
  const synth::NoiseKind kinds[3] = {synth::NoiseKind::white, synth::NoiseKind::wind_lowpass,
                                     synth::NoiseKind::pink};

  std::vector<CorpusItem> items;
  items.reserve(params.n_scenes);
  for (std::size_t i = 0; i < params.n_scenes; ++i) {
    const int label = i < n_pos ? 1 : 0;
    const synth::SceneSpec spec =
        synth::random_scene_spec(Rng::mix(params.seed, i), label, params.snr_db, kinds[i % 3]);
    auto [clip, truth] = synth::generate_scene(spec);

    CorpusItem item;
    item.id = synth::scene_id(i);
    item.label = truth.label;
    item.input = featurize(clip, stft, hw);
    item.native_mask = std::move(truth.mask);
    item.target = mask_target(item.native_mask, hw);
    item.boxes = std::move(truth.boxes);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace birdseg::pipeline
