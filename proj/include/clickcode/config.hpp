#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "clickcode/eval.hpp"
#include "clickcode/synthetic.hpp"

namespace clickcode {

/// Every tunable of the pipeline. Defaults follow the reference experimental setup
/// (n=2000, p=128, L=1000, lambda=0.2, 15 passes, M=400000, k=128, mu=3, K=10, 70% train).
struct PipelineConfig {
  std::uint64_t seed = 1;

  SyntheticConfig synthetic;
  std::size_t synthetic_count = 200;

  std::string dataset_format = "auto";  // auto | csv | binary | wav
  std::size_t dataset_n = 2000;         // target length for WAV input

  ExperimentConfig experiment;
  std::size_t folds = 10;
  double train_fraction = 0.7;

  struct Paths {
    std::filesystem::path workdir = "out";
    std::filesystem::path clicks;      // empty: <workdir>/clicks.csv
    std::filesystem::path dictionary;  // empty: <workdir>/dictionary.bin
    std::filesystem::path features;    // empty: <workdir>/features.bin
    std::filesystem::path report;      // empty: <workdir>/report.csv
    std::filesystem::path models;      // empty: <workdir>/models
    std::filesystem::path sweep;       // empty: <workdir>/sweep_<axis>.csv
  } paths;

  SweepAxis sweep_axis = SweepAxis::mu;
  std::vector<double> sweep_values{1, 2, 3, 4, 8, 20};

  std::filesystem::path clicks_path() const;
  std::filesystem::path dictionary_path() const;
  std::filesystem::path features_path() const;
  std::filesystem::path report_path() const;
  std::filesystem::path models_dir() const;
  std::filesystem::path sweep_path() const;

  /// Cross-field checks; `n` is the click length to validate patch sizes against.
  void validate(std::size_t n) const;
};

/// Flat `key = value` lines grouped under `[section]` headers; `#` starts a comment.
/// Unknown sections or keys are ConfigErrors naming the offending field.
PipelineConfig parse_config(std::istream& is, const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

/// Comma-separated list of numbers.
std::vector<double> parse_number_list(const std::string& text, const std::string& field);

}  // namespace clickcode
