#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "birdseg/audio.hpp"
#include "birdseg/dsp.hpp"
#include "birdseg/nnet.hpp"
#include "birdseg/synth.hpp"

namespace birdseg::pipeline {

/// Shared featurization for training, prediction and attention maps:
/// log-magnitude spectrogram resized to the network input and min-max scaled.
nnet::Tensor featurize(const AudioClip& clip, const dsp::StftParams& stft, std::size_t hw = 64);

/// Downsamples a native ground-truth mask to the network grid; a coarse cell
/// is active iff any native pixel in its footprint is.
nnet::Tensor mask_target(const BinaryMask& native, std::size_t hw = 64);

std::vector<synth::ManifestRow> read_manifest(const std::filesystem::path& csv_path);

/// In-memory corpus item built either from files or from the generator.
struct CorpusItem {
  std::string id;
  nnet::Tensor input;    // [1, hw, hw]
  nnet::Tensor target;   // [1, hw, hw] 0/1 (unet target)
  BinaryMask native_mask;
  std::vector<metrics::BBox> boxes;
  int label = 0;
};

/// Loads a corpus directory written by synth::generate_corpus and featurizes
/// every scene.
std::vector<CorpusItem> load_corpus(const std::filesystem::path& dir, const dsp::StftParams& stft,
                                    std::size_t hw = 64);

/// Generates and featurizes a corpus entirely in memory (no files), using the
/// same recipe as synth::generate_corpus.
std::vector<CorpusItem> synth_corpus(const synth::CorpusParams& params,
                                     const dsp::StftParams& stft, std::size_t hw = 64);

}  // namespace birdseg::pipeline
