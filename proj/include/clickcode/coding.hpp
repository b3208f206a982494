#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "clickcode/patching.hpp"

namespace clickcode {

/// p' x k matrix of unit-norm atoms.
class Dictionary {
 public:
  static constexpr double kNormTolerance = 1e-10;

  Dictionary() = default;
  /// Throws ConfigError when a column is not unit-norm within kNormTolerance.
  explicit Dictionary(Eigen::MatrixXd atoms);
  /// Rescales every column to unit norm; throws ConfigError on a zero column.
  static Dictionary normalized(Eigen::MatrixXd atoms);

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  std::size_t dim() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(atoms_.cols()); }
  Eigen::MatrixXd gram() const { return atoms_.transpose() * atoms_; }

  bool operator==(const Dictionary& o) const { return atoms_ == o.atoms_; }

 private:
  Eigen::MatrixXd atoms_;
};

/// CCD1: magic, u32 p', u32 k, f64 atoms column-major.
void save_dictionary(const Dictionary& d, const std::filesystem::path& path);
Dictionary load_dictionary(const std::filesystem::path& path);

struct SparseCode {
  Eigen::VectorXd values;  // k
  std::size_t nnz = 0;
  bool converged = true;   // false when LARS hit its step limit
  bool degenerate = false; // singular system, minimum-norm or truncated solution returned
  int steps = 0;
};

enum class EncoderMethod { ols, ridge, lasso_lars, omp };

EncoderMethod parse_encoder_method(const std::string& name);
std::string to_string(EncoderMethod m);

struct EncoderConfig {
  EncoderMethod method = EncoderMethod::lasso_lars;
  double beta = 1e-3;        // ridge penalty
  double lambda = 0.2;       // lasso penalty
  std::size_t omp_sparsity = 8;
  int lars_max_steps = 1000;
  double tol = 1e-10;        // correlation comparison tolerance

  void validate() const;
};

/// Reusable encoder for one dictionary: caches D^T D and the factorization the
/// chosen method needs. Read-only after construction, so safe to share across threads.
class Encoder {
 public:
  Encoder(Dictionary dictionary, EncoderConfig cfg);

  SparseCode encode(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// k x L code matrix V; zero columns map to zero codes.
  Eigen::MatrixXd encode_columns(const Eigen::MatrixXd& columns) const;

  const Dictionary& dictionary() const { return dict_; }
  const EncoderConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& gram() const { return gram_; }

 private:
  SparseCode encode_ols(const Eigen::VectorXd& c) const;
  SparseCode encode_ridge(const Eigen::VectorXd& c) const;
  SparseCode encode_lasso(Eigen::VectorXd c) const;
  SparseCode encode_omp(const Eigen::VectorXd& c) const;

  Dictionary dict_;
  EncoderConfig cfg_;
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;   // ridge: G + beta I ; ols: G when well-conditioned
  Eigen::MatrixXd pinv_;              // ols fallback when G is singular
  bool ols_singular_ = false;
};

SparseCode encode_ols(const Eigen::VectorXd& z, const Dictionary& d);
/// Throws ConfigError unless beta > 0.
SparseCode encode_ridge(const Eigen::VectorXd& z, const Dictionary& d, double beta);
/// LARS with the Lasso modification, stopped when the maximal residual correlation reaches lambda.
SparseCode encode_lasso(const Eigen::VectorXd& z, const Dictionary& d, double lambda, int max_steps = 1000);
/// Throws ConfigError unless 1 <= sparsity <= min(p', k).
SparseCode encode_omp(const Eigen::VectorXd& z, const Dictionary& d, std::size_t sparsity);

/// Parallel over columns; identical to calling Encoder::encode column by column.
Eigen::MatrixXd encode_batch(const PatchMatrix& patches, const Dictionary& d, const EncoderConfig& cfg);
Eigen::MatrixXd encode_batch(const PatchMatrix& patches, const Encoder& encoder);

}  // namespace clickcode
