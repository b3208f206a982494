#include "clickcode/features.hpp"

#include <algorithm>

#include "clickcode/error.hpp"
#include "clickcode/random.hpp"

namespace clickcode {

void FeatureConfig::validate(std::size_t n) const {
  patch.validate(n);
  learner.validate();
  encoder.validate();
  pyramid.validate();
  if (mu == 0.0) throw ConfigError("pooling.mu must be nonzero");
  if (dict_samples < learner.k) throw ConfigError("dictionary.samples must be >= dictionary.k");
  if (patch.pca_enabled() && dict_samples < patch.pca_dims)
    throw ConfigError("dictionary.samples must be >= patch.pca_dims");
}

Eigen::MatrixXd sample_patches(const ClickDataset& data, std::span<const std::size_t> clicks, const PatchConfig& cfg,
                               std::size_t count, std::uint64_t seed) {
  const std::size_t pool = clicks.size() * cfg.L;
  count = std::min(count, pool);
  Rng rng(seed);
  auto picks = sample_without_replacement(pool, count, rng);
  std::sort(picks.begin(), picks.end());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(cfg.p), static_cast<Eigen::Index>(count));
  std::size_t current = static_cast<std::size_t>(-1);
  PatchMatrix patches;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const std::size_t c = picks[i] / cfg.L;
    if (c != current) {
      patches = extract_patches(data[clicks[c]], cfg);
      current = c;
    }
    out.col(static_cast<Eigen::Index>(i)) = patches.columns.col(static_cast<Eigen::Index>(picks[i] % cfg.L));
  }
  return out;
}

CodingModel learn_coding_model(const ClickDataset& data, std::span<const std::size_t> clicks,
                               const FeatureConfig& cfg, std::uint64_t seed) {
  cfg.validate(data.n());
  if (clicks.empty()) throw ConfigError("learn_coding_model: no training clicks");
  CodingModel model;
  Eigen::MatrixXd sample = sample_patches(data, clicks, cfg.patch, cfg.dict_samples, derive_seed(seed, "patches"));
  if (cfg.patch.pca_enabled()) {
    model.pca = fit_pca(sample, cfg.patch.pca_dims);
    sample = project(sample, *model.pca);
  }
  LearnerConfig lc = cfg.learner;
  lc.seed = derive_seed(seed, "dictionary");
  auto learned = learn_dictionary(sample, lc);
  model.dictionary = std::move(learned.dictionary);
  return model;
}

std::vector<Eigen::MatrixXd> encode_dataset(const ClickDataset& data, const CodingModel& model,
                                            const FeatureConfig& cfg, std::span<const double> mus) {
  const Encoder encoder(model.dictionary, cfg.encoder);
  const std::size_t d = cfg.pyramid.total_rois() * model.dictionary.size();
  std::vector<Eigen::MatrixXd> out(mus.size(), Eigen::MatrixXd(static_cast<Eigen::Index>(data.size()),
                                                               static_cast<Eigen::Index>(d)));
  const auto count = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& click = data[static_cast<std::size_t>(i)];
    PatchMatrix patches = extract_patches(click, cfg.patch);
    if (model.pca) patches = project(patches, *model.pca);
    const Eigen::MatrixXd codes = encode_batch(patches, encoder);
    auto pooled = pool_click_multi(codes, patches.offsets, data.n(), cfg.pyramid, mus, click.click_id);
    for (std::size_t q = 0; q < mus.size(); ++q) out[q].row(i) = pooled[q].values.transpose();
  }
  return out;
}

FeatureSet encode_feature_set(const ClickDataset& data, const CodingModel& model, const FeatureConfig& cfg) {
  const double mus[] = {cfg.mu};
  FeatureSet set;
  set.features = std::move(encode_dataset(data, model, cfg, mus).front());
  for (const auto& c : data.clicks()) {
    set.labels.push_back({c.range_m, c.azimuth_rad});
    set.click_ids.push_back(c.click_id);
    set.hydrophone_ids.push_back(c.hydrophone_id);
  }
  return set;
}

}  // namespace clickcode
