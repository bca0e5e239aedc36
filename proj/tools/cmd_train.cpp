#include <cstdio>
#include <filesystem>

#include "birdseg/pipeline.hpp"
#include "common.hpp"

namespace birdseg::cli {

int run_train(const TrainArgs& args) {
  namespace fs = std::filesystem;
  if (args.task != "unet" && args.task != "classifier") {
    std::fprintf(stderr, "unknown task: %s (expected unet or classifier)\n", args.task.c_str());
    return kExitUsage;
  }

  const dsp::StftParams stft = stft_params(args.stft, dsp::Scale::log_db);
  const auto corpus = pipeline::load_corpus(args.corpus, stft, args.hw);
  if (corpus.empty()) {
    std::fprintf(stderr, "empty corpus at %s\n", args.corpus.c_str());
    return kExitRuntime;
  }

  nnet::TrainConfig cfg;
  cfg.epochs = args.epochs;
  cfg.batch_size = args.batch_size;
  cfg.seed = args.seed;
  cfg.dice_smooth = args.dice_smooth;
  cfg.learning_rate = args.learning_rate > 0.0 ? args.learning_rate
                                               : (args.task == "unet" ? 0.1 : 0.05);

  nnet::TrainReport report;
  nnet::Network net;
  if (args.task == "unet") {
    net = nnet::make_unet(cfg.seed, args.hw);
    std::vector<nnet::MaskSample> data;
    data.reserve(corpus.size());
    for (const auto& item : corpus) data.push_back({item.input, item.target});
    report = nnet::train(net, data, cfg);
  } else {
    net = nnet::make_classifier(cfg.seed, args.hw);
    std::vector<nnet::LabelSample> data;
    data.reserve(corpus.size());
    for (const auto& item : corpus) data.push_back({item.input, item.label});
    report = nnet::train_classifier(net, data, cfg);
  }

  nnet::save_checkpoint(args.model_out, net);
  if (!args.report_out.empty()) write_text(args.report_out, report.to_json());

  const auto& last = report.epochs.back();
  std::printf("%s: %zu epochs on %zu scenes, final mean_loss %.6f %s %.6f -> %s\n",
              args.task.c_str(), args.epochs, corpus.size(), last.mean_loss,
              report.metric_name.c_str(), last.mean_metric, args.model_out.c_str());
  return kExitOk;
}

}  // namespace birdseg::cli
