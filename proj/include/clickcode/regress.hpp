#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace clickcode {

enum class Target { range, azimuth };
std::string to_string(Target t);

enum class Loss { logistic, squared };
Loss parse_loss(const std::string& name);
std::string to_string(Loss l);

struct TrainConfig {
  double C = 1.0;
  Loss loss = Loss::squared;
  int max_iter = 100;
  double tol = 1e-8;          // stop when ||grad|| <= tol * max(1, ||grad_0||)
  bool normalize_targets = true;

  void validate() const;
};

/// label = (raw - offset) / scale during training, raw = scale * label + offset at prediction.
struct LabelScale {
  double offset = 0.0;
  double scale = 1.0;
  bool operator==(const LabelScale&) const = default;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Target target = Target::range;
  double C = 1.0;
  LabelScale label_scale;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
  bool operator==(const LinearModel&) const = default;
};

/// 0.5 ||w||^2 + C sum_i loss(y_i, w^T x_i + b). The bias is not regularized.
class RegressionObjective {
 public:
  RegressionObjective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double C, Loss loss);

  /// theta = (w, b), size d + 1.
  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  /// Second-order curvature of each sample's loss at theta.
  Eigen::VectorXd curvature(const Eigen::VectorXd& theta) const;
  /// Generalized Hessian-vector product with precomputed per-sample curvature.
  Eigen::VectorXd hessian_times(const Eigen::VectorXd& curv, const Eigen::VectorXd& v) const;
  /// Diagonal of the Hessian, used as a CG preconditioner.
  Eigen::VectorXd hessian_diagonal(const Eigen::VectorXd& curv) const;

  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()) + 1; }

 private:
  Eigen::VectorXd margins(const Eigen::VectorXd& theta) const;

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  double c_;
  Loss loss_;
};

struct TrainResult {
  LinearModel model;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_trace;  // objective before the first step and after each step
  double gradient_norm = 0.0;
};

/// Truncated Newton with preconditioned CG and Armijo backtracking.
TrainResult train(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, const TrainConfig& cfg,
                  Target target = Target::range);

double predict(const LinearModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& features);

/// CCM1: magic, u32 target tag (0 range, 1 azimuth), u32 d, f64 weights[d], f64 bias,
/// f64 label offset, f64 label scale.
void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace clickcode
