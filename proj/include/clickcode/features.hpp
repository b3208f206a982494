#pragma once

#include <optional>
#include <span>
#include <vector>

#include "clickcode/coding.hpp"
#include "clickcode/dataset.hpp"
#include "clickcode/dictionary_learning.hpp"
#include "clickcode/feature_cache.hpp"
#include "clickcode/patching.hpp"
#include "clickcode/pooling.hpp"

namespace clickcode {

/// Everything that must be learned before clicks can be turned into global features.
struct FeatureConfig {
  PatchConfig patch;
  LearnerConfig learner;          // learner.seed is overridden by the caller's seed
  std::size_t dict_samples = 400000;  // M, patches drawn uniformly for training
  EncoderConfig encoder;
  PyramidSpec pyramid = PyramidSpec::whole();
  double mu = 3.0;

  void validate(std::size_t n) const;
};

struct CodingModel {
  Dictionary dictionary;
  std::optional<PcaModel> pca;
  std::vector<double> monitor_risk;  // unused by the pipeline, kept for diagnostics
};

/// p x M matrix of patches drawn uniformly without replacement from the given clicks.
Eigen::MatrixXd sample_patches(const ClickDataset& data, std::span<const std::size_t> clicks, const PatchConfig& cfg,
                               std::size_t count, std::uint64_t seed);

/// Fits PCA (when enabled) and the dictionary on patches of the given clicks only.
CodingModel learn_coding_model(const ClickDataset& data, std::span<const std::size_t> clicks,
                               const FeatureConfig& cfg, std::uint64_t seed);

/// Global features of every click, one N x d matrix per pooling exponent.
std::vector<Eigen::MatrixXd> encode_dataset(const ClickDataset& data, const CodingModel& model,
                                            const FeatureConfig& cfg, std::span<const double> mus);

/// Features for cfg.mu packaged with labels and ids.
FeatureSet encode_feature_set(const ClickDataset& data, const CodingModel& model, const FeatureConfig& cfg);

}  // namespace clickcode
