#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clickcode/dataset.hpp"
#include "clickcode/features.hpp"
#include "clickcode/regress.hpp"

namespace clickcode {

struct SplitRound {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// K independent random train/test partitions (repeated shuffles, not disjoint folds).
struct SplitPlan {
  std::size_t K = 0;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  std::vector<SplitRound> rounds;
};

/// Each round keeps round(train_fraction * N) clicks for training. When `groups` is given
/// the split is stratified: every group gets its proportional share, and groups with at
/// least K members always keep one test click.
SplitPlan make_splits(std::size_t N, std::size_t K, double train_fraction, std::uint64_t seed,
                      std::span<const int> groups = {});

enum class ArmseMode { literal, normalized };
std::string to_string(ArmseMode m);
ArmseMode parse_armse_mode(const std::string& name);

/// literal: sqrt(sum e^2); normalized: sqrt(mean e^2).
double armse(std::span<const double> truth, std::span<const double> estimates, ArmseMode mode);

/// Test-set estimates of one round.
struct RoundPredictions {
  std::vector<std::size_t> test;
  Eigen::VectorXd truth;
  Eigen::VectorXd estimate;
};

struct EvalReport {
  Target target = Target::range;
  ArmseMode mode = ArmseMode::normalized;
  std::vector<int> hydrophones;          // column order of per_fold
  Eigen::MatrixXd per_fold;              // K x H, NaN when a hydrophone has no test click in a round
  std::vector<double> per_hydrophone;    // mean over rounds
  double global = 0.0;                   // mean over hydrophones
};

/// Per-hydrophone error per round, averaged over rounds and then over hydrophones.
EvalReport build_report(Target target, ArmseMode mode, std::span<const int> hydrophone_of,
                        const std::vector<RoundPredictions>& rounds);

struct RegressionConfig {
  TrainConfig train;
  /// Candidate C values picked by an inner 70/30 split of the training set; empty uses train.C.
  std::vector<double> C_grid{0.01, 0.1, 1.0, 10.0, 100.0};
};

/// Fits one target, selecting C on an inner split when a grid is configured.
LinearModel fit_target(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, const RegressionConfig& cfg,
                       Target target, std::uint64_t seed);

struct TargetResult {
  EvalReport normalized;
  EvalReport literal;
  EvalReport baseline_normalized;  // predicting the training mean
  EvalReport baseline_literal;
  std::vector<LinearModel> models;  // one per round
};

struct FeatureEvaluation {
  TargetResult range;
  TargetResult azimuth;
  std::size_t feature_dim = 0;
};

/// Trains and tests both targets on every round of a precomputed feature matrix.
FeatureEvaluation evaluate_features(const Eigen::MatrixXd& features, std::span<const Label> labels,
                                    std::span<const int> hydrophone_of, const SplitPlan& splits,
                                    const RegressionConfig& cfg, std::uint64_t seed);

struct ExperimentConfig {
  FeatureConfig features;
  RegressionConfig regression;
  std::uint64_t seed = 1;
};

struct ExperimentResult {
  double mu = 0.0;
  std::size_t k = 0;
  FeatureEvaluation evaluation;
  std::vector<CodingModel> coding_models;  // one per round, trained on that round's training clicks
};

/// Per round: learn PCA and dictionary on training clicks, encode every click once, pool
/// with each exponent in `mus`, then regress both targets. result[i] uses mus[i].
std::vector<ExperimentResult> run_experiment_multi(const ClickDataset& data, const ExperimentConfig& cfg,
                                                   const SplitPlan& splits, std::span<const double> mus);
ExperimentResult run_experiment(const ClickDataset& data, const ExperimentConfig& cfg, const SplitPlan& splits);

enum class SweepAxis { mu, k };
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis a);

struct SweepRow {
  double value = 0.0;
  ExperimentResult result;
};

/// One experiment per value on shared splits (a mu sweep reuses each round's codes).
std::vector<SweepRow> sweep(const ClickDataset& data, const ExperimentConfig& base, SweepAxis axis,
                            std::span<const double> values, const SplitPlan& splits);

/// Rows `axis_value,target,armse_mode,armse_global,armse_h<id>...,fold,seed`: one row per
/// round and a `mean` row per (value, target, mode).
void write_report_csv(std::ostream& os, std::span<const std::pair<std::string, const FeatureEvaluation*>> entries,
                      std::uint64_t seed);
void write_report_csv(const std::filesystem::path& path,
                      std::span<const std::pair<std::string, const FeatureEvaluation*>> entries, std::uint64_t seed);

/// One row per value: <axis>,feature_dim,range_armse,azimuth_armse,range_armse_literal,
/// azimuth_armse_literal,range_baseline,azimuth_baseline (normalized unless noted).
void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace clickcode
