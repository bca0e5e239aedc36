#include "common.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace birdseg::cli {

dsp::StftParams stft_params(const StftOptions& opts, dsp::Scale scale) {
  dsp::StftParams params;
  params.window_len = opts.window;
  params.hop = opts.hop;
  params.scale = scale;
  return params;
}

std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& input) {
  namespace fs = std::filesystem;
  std::vector<fs::path> wavs;
  if (fs::is_regular_file(input)) {
    wavs.push_back(input);
  } else if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".wav") {
        wavs.push_back(entry.path());
      }
    }
    // Also accept a corpus root with an audio/ subdirectory.
    if (wavs.empty() && fs::is_directory(input / "audio")) {
      for (const auto& entry : fs::directory_iterator(input / "audio")) {
        if (entry.is_regular_file() && entry.path().extension() == ".wav") {
          wavs.push_back(entry.path());
        }
      }
    }
  } else {
    throw std::runtime_error("input not found: " + input.string());
  }
  std::sort(wavs.begin(), wavs.end());
  return wavs;
}

std::vector<std::string> run_parallel(std::size_t n, std::size_t jobs,
                                      const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  if (n == 0) return errors;
  jobs = std::max<std::size_t>(1, std::min(jobs, n));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

void write_boxes_json(const std::filesystem::path& path, const std::vector<metrics::BBox>& boxes) {
  nlohmann::json j = nlohmann::json::array();
  for (const metrics::BBox& b : boxes) {
    j.push_back({{"t0", b.t0}, {"t1", b.t1}, {"f0", b.f0}, {"f1", b.f1}});
  }
  write_text(path, j.dump(2) + "\n");
}

std::vector<metrics::BBox> read_boxes_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(f);
  std::vector<metrics::BBox> boxes;
  for (const auto& b : j) {
    boxes.push_back({b.at("t0").get<int>(), b.at("t1").get<int>(), b.at("f0").get<int>(),
                     b.at("f1").get<int>()});
  }
  return boxes;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace birdseg::cli
