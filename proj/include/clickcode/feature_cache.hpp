#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace clickcode {

struct Label {
  double range_m = 0.0;
  double azimuth_rad = 0.0;
  bool operator==(const Label&) const = default;
};

/// Row i of `features` is the global feature of click i.
struct FeatureSet {
  Eigen::MatrixXd features;  // N x d
  std::vector<Label> labels;
  // Sidecar metadata; not part of the CCF1 cache itself.
  std::vector<std::int64_t> click_ids;
  std::vector<int> hydrophone_ids;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// CCF1 cache: magic, u32 count, u32 d, count*d f64 (row by row), count*2 f64 labels.
void save_features(const FeatureSet& set, const std::filesystem::path& path);
/// Reads features and labels only; click_ids/hydrophone_ids come back empty.
FeatureSet load_features(const std::filesystem::path& path);

/// Sidecar `<cache>.ids.csv` with `click_id,hydrophone_id` rows.
std::filesystem::path feature_index_path(const std::filesystem::path& cache);
void save_feature_index(const FeatureSet& set, const std::filesystem::path& path);
/// Fills click_ids/hydrophone_ids; throws ShapeError when the row count differs.
void load_feature_index(FeatureSet& set, const std::filesystem::path& path);

}  // namespace clickcode
