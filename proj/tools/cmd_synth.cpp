#include <cstdio>

#include "birdseg/synth.hpp"
#include "common.hpp"

namespace birdseg::cli {

int run_synth(const SynthArgs& args) {
  synth::CorpusParams params;
  params.n_scenes = args.n;
  params.pos_fraction = args.pos_fraction;
  params.seed = args.seed;
  params.snr_db = args.snr_db;

  const auto rows = synth::generate_corpus(params, args.out);
  std::size_t positives = 0;
  for (const auto& row : rows) positives += row.label;
  std::printf("wrote %zu scenes (%zu positive) to %s\n", rows.size(), positives,
              args.out.c_str());
  return kExitOk;
}

}  // namespace birdseg::cli
