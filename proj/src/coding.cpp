#include "clickcode/coding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "binary_io.hpp"
#include "clickcode/error.hpp"

namespace clickcode {

Dictionary::Dictionary(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) {
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
    const double n2 = atoms_.col(j).squaredNorm();
    if (std::abs(n2 - 1.0) > kNormTolerance)
      throw ConfigError("dictionary atom " + std::to_string(j) + " is not unit-norm (norm^2 = " +
                        std::to_string(n2) + ")");
  }
}

Dictionary Dictionary::normalized(Eigen::MatrixXd atoms) {
  for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
    const double n = atoms.col(j).norm();
    if (!(n > 0.0)) throw ConfigError("dictionary atom " + std::to_string(j) + " has zero norm");
    atoms.col(j) /= n;
  }
  return Dictionary(std::move(atoms));
}

namespace {
constexpr std::string_view kDictMagic = "CCD1";
}

void save_dictionary(const Dictionary& d, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto os = detail::open_out(path.string());
  detail::write_magic(os, kDictMagic);
  detail::write_u32(os, static_cast<std::uint32_t>(d.dim()));
  detail::write_u32(os, static_cast<std::uint32_t>(d.size()));
  detail::write_f64s(os, d.atoms().data(), static_cast<std::size_t>(d.atoms().size()));
  detail::finish_write(os, path.string());
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  auto is = detail::open_in(path.string());
  const std::string what = path.string();
  detail::expect_magic(is, kDictMagic, what);
  const auto p = detail::read_u32(is, what);
  const auto k = detail::read_u32(is, what);
  Eigen::MatrixXd atoms(p, k);
  detail::read_f64s(is, atoms.data(), static_cast<std::size_t>(p) * k, what);
  return Dictionary(std::move(atoms));
}

EncoderMethod parse_encoder_method(const std::string& name) {
  if (name == "ols") return EncoderMethod::ols;
  if (name == "ridge") return EncoderMethod::ridge;
  if (name == "lasso_lars" || name == "lasso" || name == "lars") return EncoderMethod::lasso_lars;
  if (name == "omp") return EncoderMethod::omp;
  throw ConfigError("unknown encoder method '" + name + "'");
}

std::string to_string(EncoderMethod m) {
  switch (m) {
    case EncoderMethod::ols: return "ols";
    case EncoderMethod::ridge: return "ridge";
    case EncoderMethod::lasso_lars: return "lasso_lars";
    case EncoderMethod::omp: return "omp";
  }
  return "?";
}

void EncoderConfig::validate() const {
  if (method == EncoderMethod::ridge && !(beta > 0)) throw ConfigError("encoder.beta must be > 0");
  if (method == EncoderMethod::lasso_lars && !(lambda > 0)) throw ConfigError("encoder.lambda must be > 0");
  if (method == EncoderMethod::omp && omp_sparsity < 1) throw ConfigError("encoder.omp_sparsity must be >= 1");
  if (lars_max_steps < 1) throw ConfigError("encoder.lars_max_steps must be >= 1");
  if (!(tol > 0)) throw ConfigError("encoder.tol must be > 0");
}

namespace {

std::size_t count_nonzero(const Eigen::VectorXd& v) {
  return static_cast<std::size_t>((v.array() != 0.0).count());
}

// Gram submatrix and right-hand side restricted to an index set.
Eigen::MatrixXd gram_block(const Eigen::MatrixXd& g, const std::vector<Eigen::Index>& idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) out(a, b) = g(idx[a], idx[b]);
  return out;
}

// Squared distance of atom j from the span of the active atoms, via the Schur complement.
double schur_complement(const Eigen::MatrixXd& g, const std::vector<Eigen::Index>& active,
                        const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index j) {
  if (active.empty()) return g(j, j);
  Eigen::VectorXd gj(static_cast<Eigen::Index>(active.size()));
  for (std::size_t a = 0; a < active.size(); ++a) gj(static_cast<Eigen::Index>(a)) = g(active[a], j);
  return g(j, j) - gj.dot(llt.solve(gj));
}

constexpr double kIndependenceTol = 1e-10;

// Largest violation of the Lasso optimality conditions for x, given c0 = D^T z and G = D^T D.
double kkt_violation(const Eigen::MatrixXd& g, const Eigen::VectorXd& c0, const Eigen::VectorXd& x, double lambda) {
  const Eigen::VectorXd r = c0 - g * x;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double v = x(j) == 0.0 ? std::abs(r(j)) - lambda : std::abs(r(j) - (x(j) > 0 ? lambda : -lambda));
    worst = std::max(worst, v);
  }
  return worst;
}

// Warm-started cyclic coordinate descent on the Gram form, then an exact solve on the support it finds.
// Used when the homotopy path cannot continue (an entering atom in the span of a full active set).
void lasso_gram_cd(const Eigen::MatrixXd& g, const Eigen::VectorXd& c0, double lambda, Eigen::VectorXd& x,
                   double tol) {
  const Eigen::Index k = x.size();
  Eigen::VectorXd r = c0 - g * x;
  const double scale = std::max(1.0, c0.cwiseAbs().maxCoeff());
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double largest = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double rho = r(j) + g(j, j) * x(j);
      const double next = rho > lambda ? (rho - lambda) / g(j, j) : rho < -lambda ? (rho + lambda) / g(j, j) : 0.0;
      const double delta = next - x(j);
      if (delta != 0.0) {
        r -= delta * g.col(j);
        x(j) = next;
        largest = std::max(largest, std::abs(delta));
      }
    }
    if (largest <= 1e-15 * scale) break;
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < k; ++j)
    if (x(j) != 0.0) support.push_back(j);
  if (support.empty()) return;
  Eigen::LLT<Eigen::MatrixXd> llt(gram_block(g, support));
  if (llt.info() != Eigen::Success) return;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Eigen::Index j = support[i];
    rhs(static_cast<Eigen::Index>(i)) = c0(j) - (x(j) > 0 ? lambda : -lambda);
  }
  const Eigen::VectorXd xs = llt.solve(rhs);
  Eigen::VectorXd polished = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Eigen::Index j = support[i];
    if ((xs(static_cast<Eigen::Index>(i)) > 0) != (x(j) > 0)) return;
    polished(j) = xs(static_cast<Eigen::Index>(i));
  }
  if (kkt_violation(g, c0, polished, lambda) <= std::max(kkt_violation(g, c0, x, lambda), tol)) x = polished;
}

}  // namespace

Encoder::Encoder(Dictionary dictionary, EncoderConfig cfg) : dict_(std::move(dictionary)), cfg_(cfg) {
  cfg_.validate();
  gram_ = dict_.gram();
  const auto k = gram_.rows();
  if (cfg_.method == EncoderMethod::ridge) {
    llt_.compute(gram_ + cfg_.beta * Eigen::MatrixXd::Identity(k, k));
    if (llt_.info() != Eigen::Success) throw NumericError("ridge: Cholesky factorization of D^T D + beta I failed");
  } else if (cfg_.method == EncoderMethod::ols) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_);
    if (eig.info() != Eigen::Success) throw NumericError("ols: eigen-decomposition of D^T D failed");
    const auto& ev = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(ev.maxCoeff(), 0.0);
    if (k > 0 && ev.minCoeff() > cutoff) {
      llt_.compute(gram_);
    }
    if (k == 0 || !(ev.minCoeff() > cutoff) || llt_.info() != Eigen::Success) {
      ols_singular_ = true;
      Eigen::VectorXd inv = ev.unaryExpr([cutoff](double v) { return v > cutoff ? 1.0 / v : 0.0; });
      pinv_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    }
  } else if (cfg_.method == EncoderMethod::omp) {
    const std::size_t limit = std::min(dict_.dim(), dict_.size());
    if (cfg_.omp_sparsity > limit)
      throw ConfigError("encoder.omp_sparsity must be <= min(p', k) = " + std::to_string(limit));
  }
}

SparseCode Encoder::encode(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (static_cast<std::size_t>(z.size()) != dict_.dim())
    throw ShapeError("encode: patch dimension " + std::to_string(z.size()) + " does not match dictionary " +
                     std::to_string(dict_.dim()));
  Eigen::VectorXd c = dict_.atoms().transpose() * z;
  switch (cfg_.method) {
    case EncoderMethod::ols: return encode_ols(c);
    case EncoderMethod::ridge: return encode_ridge(c);
    case EncoderMethod::lasso_lars: return encode_lasso(std::move(c));
    case EncoderMethod::omp: return encode_omp(c);
  }
  throw ConfigError("unknown encoder method");
}

SparseCode Encoder::encode_ols(const Eigen::VectorXd& c) const {
  SparseCode out;
  out.values = ols_singular_ ? Eigen::VectorXd(pinv_ * c) : Eigen::VectorXd(llt_.solve(c));
  out.degenerate = ols_singular_;
  out.nnz = count_nonzero(out.values);
  return out;
}

SparseCode Encoder::encode_ridge(const Eigen::VectorXd& c) const {
  SparseCode out;
  out.values = llt_.solve(c);
  out.nnz = count_nonzero(out.values);
  return out;
}

// Homotopy / LARS-Lasso on correlations c = D^T r, using only the Gram matrix.
// Invariant along the path: active correlations equal sign_j * level.
SparseCode Encoder::encode_lasso(Eigen::VectorXd c) const {
  const Eigen::Index k = c.size();
  const double lambda = cfg_.lambda;
  const double tol = cfg_.tol;
  SparseCode out;
  out.values = Eigen::VectorXd::Zero(k);
  if (k == 0) return out;

  double level = c.cwiseAbs().maxCoeff();
  if (level <= lambda) return out;

  std::vector<Eigen::Index> active;
  std::vector<double> signs;
  std::vector<char> is_active(static_cast<std::size_t>(k), 0);
  std::vector<char> blocked(static_cast<std::size_t>(k), 0);

  Eigen::Index first = 0;
  while (std::abs(c(first)) < level - tol) ++first;
  active.push_back(first);
  signs.push_back(c(first) > 0 ? 1.0 : -1.0);
  is_active[static_cast<std::size_t>(first)] = 1;

  const Eigen::VectorXd c0 = c;
  Eigen::Index just_dropped = -1;
  out.converged = false;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int step = 0; step < cfg_.lars_max_steps; ++step) {
    out.steps = step + 1;
    const auto m = static_cast<Eigen::Index>(active.size());
    llt.compute(gram_block(gram_, active));
    if (llt.info() != Eigen::Success) {
      out.degenerate = true;
      break;
    }
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(signs.data(), m);
    const Eigen::VectorXd u = llt.solve(s);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < m; ++i) a += u(i) * gram_.col(active[static_cast<std::size_t>(i)]);

    enum class Event { finish, enter, drop } event = Event::finish;
    double gamma = level - lambda;
    Eigen::Index who = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (is_active[static_cast<std::size_t>(j)] || blocked[static_cast<std::size_t>(j)] || j == just_dropped)
        continue;
      const double den_pos = 1.0 - a(j);
      if (den_pos > 1e-12) {
        const double t = std::max(level - c(j), 0.0) / den_pos;
        if (t < gamma) { gamma = t; event = Event::enter; who = j; }
      }
      const double den_neg = 1.0 + a(j);
      if (den_neg > 1e-12) {
        const double t = std::max(level + c(j), 0.0) / den_neg;
        if (t < gamma) { gamma = t; event = Event::enter; who = j; }
      }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = active[static_cast<std::size_t>(i)];
      if (out.values(j) == 0.0 || u(i) == 0.0) continue;
      const double t = -out.values(j) / u(i);
      if (t > 0.0 && t < gamma) { gamma = t; event = Event::drop; who = i; }
    }

    for (Eigen::Index i = 0; i < m; ++i) out.values(active[static_cast<std::size_t>(i)]) += gamma * u(i);
    c -= gamma * a;
    level -= gamma;

    if (event == Event::finish) {
      out.converged = true;
      break;
    }
    if (event == Event::drop) {
      const Eigen::Index j = active[static_cast<std::size_t>(who)];
      out.values(j) = 0.0;
      is_active[static_cast<std::size_t>(j)] = 0;
      active.erase(active.begin() + who);
      signs.erase(signs.begin() + who);
      just_dropped = j;
      if (active.empty()) {
        // Path restarts from zero: re-select the most correlated atom.
        level = 0.0;
        for (Eigen::Index q = 0; q < k; ++q)
          if (q != j) level = std::max(level, std::abs(c(q)));
        if (level <= lambda) {
          out.converged = true;
          break;
        }
        Eigen::Index q = 0;
        while (q == j || std::abs(c(q)) < level - tol) ++q;
        active.push_back(q);
        signs.push_back(c(q) > 0 ? 1.0 : -1.0);
        is_active[static_cast<std::size_t>(q)] = 1;
      }
      continue;
    }
    // Entering atom: refuse atoms (numerically) in the span of the active set.
    const double schur = schur_complement(gram_, active, llt, who);
    if (schur <= kIndependenceTol * std::max(gram_(who, who), 1.0)) {
      blocked[static_cast<std::size_t>(who)] = 1;
      out.degenerate = true;
      continue;
    }
    active.push_back(who);
    signs.push_back(c(who) > 0 ? 1.0 : -1.0);
    is_active[static_cast<std::size_t>(who)] = 1;
    just_dropped = -1;
  }
  // Verify against freshly computed correlations and finish off paths that stalled or drifted.
  // A path cut short by the step limit is left as is.
  const bool hit_limit = !out.converged && !out.degenerate;
  const double kkt_tol = 1e-10 * std::max(1.0, c0.cwiseAbs().maxCoeff());
  if (!hit_limit && kkt_violation(gram_, c0, out.values, lambda) > kkt_tol) {
    lasso_gram_cd(gram_, c0, lambda, out.values, kkt_tol);
    out.converged = kkt_violation(gram_, c0, out.values, lambda) <= kkt_tol;
  }
  out.nnz = count_nonzero(out.values);
  return out;
}

SparseCode Encoder::encode_omp(const Eigen::VectorXd& c0) const {
  const Eigen::Index k = c0.size();
  SparseCode out;
  out.values = Eigen::VectorXd::Zero(k);
  std::vector<Eigen::Index> active;
  std::vector<char> is_active(static_cast<std::size_t>(k), 0);
  Eigen::VectorXd corr = c0;
  Eigen::VectorXd x;
  Eigen::LLT<Eigen::MatrixXd> llt;
  const double scale = std::max(1.0, c0.cwiseAbs().maxCoeff());
  for (std::size_t t = 0; t < cfg_.omp_sparsity; ++t) {
    double best = -1.0;
    Eigen::Index who = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      if (std::abs(corr(j)) > best + cfg_.tol) {
        best = std::abs(corr(j));
        who = j;
      }
    }
    if (who < 0 || best <= 1e-14 * scale) break;
    if (!active.empty()) {
      const double schur = schur_complement(gram_, active, llt, who);
      if (schur <= kIndependenceTol * std::max(gram_(who, who), 1.0)) {
        out.degenerate = true;
        break;
      }
    }
    active.push_back(who);
    is_active[static_cast<std::size_t>(who)] = 1;
    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) rhs(i) = c0(active[static_cast<std::size_t>(i)]);
    if (m == 1) {
      x = rhs / gram_(who, who);
      llt.compute(gram_block(gram_, active));
    } else {
      llt.compute(gram_block(gram_, active));
      if (llt.info() != Eigen::Success) {
        out.degenerate = true;
        active.pop_back();
        break;
      }
      x = llt.solve(rhs);
    }
    corr = c0;
    for (Eigen::Index i = 0; i < m; ++i) corr -= x(i) * gram_.col(active[static_cast<std::size_t>(i)]);
    out.steps = static_cast<int>(m);
  }
  for (std::size_t i = 0; i < active.size() && static_cast<Eigen::Index>(i) < x.size(); ++i)
    out.values(active[i]) = x(static_cast<Eigen::Index>(i));
  out.nnz = count_nonzero(out.values);
  return out;
}

Eigen::MatrixXd Encoder::encode_columns(const Eigen::MatrixXd& columns) const {
  if (static_cast<std::size_t>(columns.rows()) != dict_.dim())
    throw ShapeError("encode_batch: patch dimension " + std::to_string(columns.rows()) +
                     " does not match dictionary " + std::to_string(dict_.dim()));
  const auto cols = columns.cols();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dict_.size()), cols);
#pragma omp parallel for schedule(dynamic, 32)
  for (Eigen::Index i = 0; i < cols; ++i) {
    if (columns.col(i).squaredNorm() == 0.0) continue;
    v.col(i) = encode(columns.col(i)).values;
  }
  return v;
}

SparseCode encode_ols(const Eigen::VectorXd& z, const Dictionary& d) {
  EncoderConfig cfg;
  cfg.method = EncoderMethod::ols;
  return Encoder(d, cfg).encode(z);
}

SparseCode encode_ridge(const Eigen::VectorXd& z, const Dictionary& d, double beta) {
  if (!(beta > 0)) throw ConfigError("encode_ridge: beta must be > 0 (use encode_ols for beta = 0)");
  EncoderConfig cfg;
  cfg.method = EncoderMethod::ridge;
  cfg.beta = beta;
  return Encoder(d, cfg).encode(z);
}

SparseCode encode_lasso(const Eigen::VectorXd& z, const Dictionary& d, double lambda, int max_steps) {
  EncoderConfig cfg;
  cfg.method = EncoderMethod::lasso_lars;
  cfg.lambda = lambda;
  cfg.lars_max_steps = max_steps;
  return Encoder(d, cfg).encode(z);
}

SparseCode encode_omp(const Eigen::VectorXd& z, const Dictionary& d, std::size_t sparsity) {
  EncoderConfig cfg;
  cfg.method = EncoderMethod::omp;
  cfg.omp_sparsity = sparsity;
  return Encoder(d, cfg).encode(z);
}

Eigen::MatrixXd encode_batch(const PatchMatrix& patches, const Encoder& encoder) {
  return encoder.encode_columns(patches.columns);
}

Eigen::MatrixXd encode_batch(const PatchMatrix& patches, const Dictionary& d, const EncoderConfig& cfg) {
  return Encoder(d, cfg).encode_columns(patches.columns);
}

}  // namespace clickcode
