#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace clickcode {

struct PyramidLayer {
  double a = 1.0;      // subdivision ratio, ROI length = floor(a n)
  double b = 1.0;      // overlapping ratio, ROI shift = floor(b n)
  double omega = 1.0;  // weight applied to every ROI of the layer
};

/// Temporal pyramid, one row (a, b, omega) per layer.
struct PyramidSpec {
  std::vector<PyramidLayer> layers;

  /// D_i = floor((1 - a_i) / b_i + 1).
  static std::size_t roi_count(const PyramidLayer& layer);
  /// D = sum_i D_i.
  std::size_t total_rois() const;
  void validate() const;

  /// [[1, 1, 1]]: a single ROI spanning the click.
  static PyramidSpec whole();
  /// [[1, 1, 1], [1/3, 1/3, 1]]: whole click plus three non-overlapping thirds.
  static PyramidSpec whole_plus_thirds();
};

/// Parses "a,b,omega" where each entry is a decimal or a fraction p/q.
PyramidLayer parse_pyramid_layer(const std::string& row);

struct Roi {
  std::size_t layer = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  double weight = 1.0;
};

/// ROIs in (layer, position) order; starts at j floor(b_i n), clamped so start + length <= n.
std::vector<Roi> compute_rois(std::size_t n, const PyramidSpec& spec);

/// (sum |v_m|^mu)^(1/mu), evaluated with the largest magnitude factored out.
/// mu = 1 sums magnitudes directly. Throws ConfigError for mu = 0.
double pool_lmu(std::span<const double> v, double mu);

struct GlobalFeature {
  Eigen::VectorXd values;  // d = D k, ordered (layer, roi, atom)
  std::int64_t click_id = 0;
};

/// Pools row j of `codes` over the patches whose start offset falls inside each ROI.
GlobalFeature pool_click(const Eigen::MatrixXd& codes, std::span<const std::size_t> patch_offsets, std::size_t n,
                         const PyramidSpec& spec, double mu, std::int64_t click_id = 0);

/// Pools one code matrix for several exponents; result[i] uses mus[i].
std::vector<GlobalFeature> pool_click_multi(const Eigen::MatrixXd& codes, std::span<const std::size_t> patch_offsets,
                                            std::size_t n, const PyramidSpec& spec, std::span<const double> mus,
                                            std::int64_t click_id = 0);

}  // namespace clickcode
