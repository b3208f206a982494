#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "clickcode/dataset.hpp"

namespace clickcode {

struct PatchConfig {
  std::size_t p = 128;         // patch length in samples
  std::size_t L = 1000;        // patches per click
  std::size_t pca_dims = 0;    // p' ; 0 disables PCA
  bool center = false;         // subtract the patch mean before normalizing

  bool pca_enabled() const { return pca_dims != 0; }
  /// Dimension of encoded patches (p' when PCA is on, otherwise p).
  std::size_t output_dim() const { return pca_enabled() ? pca_dims : p; }
  /// Throws ConfigError unless 1 <= p <= n, L >= 1 and 1 <= p' <= p.
  void validate(std::size_t n) const;
};

/// L patches of one click, one per column.
struct PatchMatrix {
  Eigen::MatrixXd columns;             // p x L (p' x L after projection)
  std::vector<std::size_t> offsets;    // start sample of each patch
  std::int64_t source_click_id = 0;
};

/// o_l = min(l * ceil(n / L), n - p), l = 0..L-1.
std::vector<std::size_t> patch_offsets(std::size_t n, const PatchConfig& cfg);

/// Each patch is divided by its l2 norm; all-zero patches stay zero.
PatchMatrix extract_patches(std::span<const double> samples, const PatchConfig& cfg, std::int64_t click_id = 0);
PatchMatrix extract_patches(const ClickRecord& click, const PatchConfig& cfg);

struct PcaModel {
  Eigen::VectorXd mean;                // p
  Eigen::MatrixXd basis;               // p x p', orthonormal columns
  Eigen::VectorXd explained_variance;  // p', non-increasing
  bool degenerate = false;             // sample rank < p'

  std::size_t input_dim() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(basis.cols()); }
};

/// Top-p' principal directions of the column sample. Each basis column is
/// signed so its largest-magnitude entry is positive.
PcaModel fit_pca(const Eigen::MatrixXd& sample, std::size_t p_prime);

/// basis^T (column - mean) for every column. Offsets are carried over.
PatchMatrix project(const PatchMatrix& patches, const PcaModel& model);
Eigen::MatrixXd project(const Eigen::MatrixXd& columns, const PcaModel& model);

/// CCP1: magic, u32 p, u32 p', f64 mean[p], f64 basis (column-major), f64 variance[p'].
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace clickcode
