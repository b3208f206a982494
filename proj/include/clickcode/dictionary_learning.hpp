#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "clickcode/coding.hpp"

namespace clickcode {

struct LearnerConfig {
  std::size_t k = 128;
  double lambda = 0.2;
  int iterations = 15;           // full passes over the sample
  std::size_t batch_size = 256;
  int lars_max_steps = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Accumulators of the online update. A = sum alpha alpha^T, B = sum z alpha^T,
/// taken over the most recent code of every training column.
struct LearnerState {
  Eigen::MatrixXd A;  // k x k
  Eigen::MatrixXd B;  // p' x k
  std::size_t seen = 0;  // codes computed so far (all passes)
  double lambda = 0.2;
  std::size_t batch_size = 256;
  int iterations = 0;    // completed passes
};

/// Atoms with A_jj below this are treated as unused.
inline constexpr double kDeadAtomThreshold = 1e-12;

/// k distinct nonzero sample columns, drawn uniformly without replacement, renormalized.
/// Throws ConfigError when the sample has fewer than k columns (or fewer than k nonzero ones).
Dictionary init_dictionary(const Eigen::MatrixXd& sample, std::size_t k, std::uint64_t seed);

/// Mean over columns of 0.5 ||z - D alpha||^2 + lambda ||alpha||_1 with fresh Lasso codes.
double empirical_risk(const Dictionary& d, const Eigen::MatrixXd& patches, double lambda, int max_steps = 1000);

/// Replaces every atom with A_jj < kDeadAtomThreshold by a renormalized sample column,
/// drawn in the same way as init_dictionary. Atoms stay unchanged if the sample runs out
/// of nonzero columns.
Dictionary replace_dead_atoms(const Dictionary& d, const LearnerState& state, const Eigen::MatrixXd& sample,
                              std::uint64_t seed, std::size_t* replaced = nullptr);

struct LearnResult {
  Dictionary dictionary;
  LearnerState state;
  /// Monitor-batch risk before learning and after each pass (empty without a monitor batch).
  std::vector<double> monitor_risk;
  /// Surrogate risk from the stored codes at the end of each pass.
  std::vector<double> surrogate_risk;
  std::vector<std::size_t> replaced_per_pass;
};

/// Alternates Lasso coding of each mini-batch against the current dictionary with one
/// block-coordinate sweep over the atoms using A and B. When a column is revisited in a
/// later pass its previous contribution to A and B is replaced by the new one.
/// Called after every pass with the pass index (from 0) and the dictionary at that point.
using PassObserver = std::function<void(int, const Dictionary&, const LearnerState&)>;

LearnResult learn_dictionary(const Eigen::MatrixXd& patches, const LearnerConfig& cfg,
                             const Eigen::MatrixXd* monitor = nullptr, const Dictionary* initial = nullptr,
                             const PassObserver& observer = {});

}  // namespace clickcode
