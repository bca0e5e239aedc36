#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "common.hpp"

using namespace birdseg::cli;

int main(int argc, char** argv) {
  CLI::App app{"Bird vocalization tagging on audio spectrograms: blind blob "
               "segmentation, learned masks, attention-map localization and "
               "evaluation over a synthetic ground-truth corpus."};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI-style key=value file");
  app.failure_message(CLI::FailureMessage::help);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth_cmd->add_option("--n", synth.n, "Number of scenes")->required();
  synth_cmd->add_option("--pos-fraction", synth.pos_fraction, "Fraction of positive scenes")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Master seed")->capture_default_str();
  synth_cmd->add_option("--snr", synth.snr_db, "Event SNR in dB")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output corpus directory")->required();

  SpectrogramArgs spectrogram;
  auto* spec_cmd = app.add_subcommand("spectrogram", "Compute spectrograms for wav files");
  spec_cmd->add_option("--input", spectrogram.input, "Wav file or directory")->required();
  spec_cmd->add_option("--out", spectrogram.out, "Output directory")->required();
  spec_cmd->add_option("--window", spectrogram.stft.window, "STFT window length")->capture_default_str();
  spec_cmd->add_option("--hop", spectrogram.stft.hop, "STFT hop in samples")->capture_default_str();
  spec_cmd->add_option("--scale", spectrogram.scale, "Magnitude scale: log or linear")
      ->check(CLI::IsMember({"log", "linear"}))
      ->capture_default_str();
  spec_cmd->add_flag("--mean-subtract", spectrogram.mean_subtract,
                     "Subtract each frequency row's mean");
  spec_cmd->add_option("--mel", spectrogram.mel,
                       "Smooth through a mel filterbank of this size (0 = off)");
  spec_cmd->add_flag("--png", spectrogram.png, "Also render an 8-bit grayscale PNG");
  spec_cmd->add_option("--jobs", spectrogram.jobs, "Parallel workers")->capture_default_str();

  SegmentArgs segment;
  auto* seg_cmd = app.add_subcommand("segment", "Blind blob segmentation of spectrograms");
  seg_cmd->add_option("--input", segment.input, "Wav file, directory, or corpus root")->required();
  seg_cmd->add_option("--out", segment.out, "Output directory")->required();
  seg_cmd->add_option("--window", segment.stft.window, "STFT window length")->capture_default_str();
  seg_cmd->add_option("--hop", segment.stft.hop, "STFT hop in samples")->capture_default_str();
  seg_cmd->add_option("--factor", segment.seg.factor, "Median clipping factor")->capture_default_str();
  seg_cmd->add_option("--close", segment.seg.close_size, "Closing element size (odd)")->capture_default_str();
  seg_cmd->add_option("--dilate", segment.seg.dilate_size, "Dilation element size (odd)")->capture_default_str();
  seg_cmd->add_option("--median", segment.seg.median_k, "Median filter size (odd)")->capture_default_str();
  seg_cmd->add_option("--min-area", segment.seg.min_area, "Minimum blob area in pixels")->capture_default_str();
  seg_cmd->add_flag("--yolo", segment.yolo, "Also export YOLO label files");
  seg_cmd->add_flag("--rle", segment.rle, "Also export run-length-encoded text masks");
  seg_cmd->add_option("--jobs", segment.jobs, "Parallel workers")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the toy unet or classifier on a corpus");
  train_cmd->add_option("--task", train.task, "unet or classifier")
      ->check(CLI::IsMember({"unet", "classifier"}))
      ->capture_default_str();
  train_cmd->add_option("--corpus", train.corpus, "Corpus directory with manifest.csv")->required();
  train_cmd->add_option("--model", train.model_out, "Checkpoint output path")->capture_default_str();
  train_cmd->add_option("--report", train.report_out, "Training report JSON output path");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch", train.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--lr", train.learning_rate, "Learning rate (default 0.1 unet, 0.05 classifier)");
  train_cmd->add_option("--seed", train.seed, "Init/shuffle seed")->capture_default_str();
  train_cmd->add_option("--smooth", train.dice_smooth, "Dice smoothing constant")->capture_default_str();
  train_cmd->add_option("--window", train.stft.window, "STFT window length")->capture_default_str();
  train_cmd->add_option("--hop", train.stft.hop, "STFT hop in samples")->capture_default_str();
  train_cmd->add_option("--size", train.hw, "Network input size")->capture_default_str();

  PredictArgs predict;
  auto* pred_cmd = app.add_subcommand("predict", "Predict masks, grad-CAM or saliency maps");
  pred_cmd->add_option("--model", predict.model, "Checkpoint path")->required();
  pred_cmd->add_option("--input", predict.input, "Wav file, directory, or corpus root")->required();
  pred_cmd->add_option("--out", predict.out, "Output directory")->required();
  pred_cmd->add_option("--mode", predict.mode, "mask, cam or saliency")
      ->check(CLI::IsMember({"mask", "cam", "saliency"}))
      ->capture_default_str();
  pred_cmd->add_option("--threshold", predict.threshold, "Binarization threshold")->capture_default_str();
  pred_cmd->add_option("--min-area", predict.min_area, "Minimum attention blob area")->capture_default_str();
  pred_cmd->add_flag("--yolo", predict.yolo, "Also export YOLO label files (cam/saliency)");
  pred_cmd->add_option("--jobs", predict.jobs, "Parallel workers")->capture_default_str();
  pred_cmd->add_option("--window", predict.stft.window, "STFT window length")->capture_default_str();
  pred_cmd->add_option("--hop", predict.stft.hop, "STFT hop in samples")->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Prediction directory")->required();
  eval_cmd->add_option("--truth", eval.truth, "Ground truth / corpus directory")->required();
  eval_cmd->add_option("--kind", eval.kind, "boxes, masks or labels")
      ->required()
      ->check(CLI::IsMember({"boxes", "masks", "labels"}));
  eval_cmd->add_option("--out", eval.out, "Report output directory (default: --pred)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (spec_cmd->parsed()) return run_spectrogram(spectrogram);
    if (seg_cmd->parsed()) return run_segment(segment);
    if (train_cmd->parsed()) return run_train(train);
    if (pred_cmd->parsed()) return run_predict(predict);
    if (eval_cmd->parsed()) return run_eval(eval);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
