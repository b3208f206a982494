#include "clickcode/dictionary_learning.hpp"

#include <numeric>
#include <random>

#include "clickcode/error.hpp"
#include "clickcode/random.hpp"

namespace clickcode {

void LearnerConfig::validate() const {
  if (k < 1) throw ConfigError("dictionary.k must be >= 1");
  if (!(lambda > 0)) throw ConfigError("dictionary.lambda must be > 0");
  if (iterations < 1) throw ConfigError("dictionary.iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("dictionary.batch_size must be >= 1");
  if (lars_max_steps < 1) throw ConfigError("dictionary.lars_max_steps must be >= 1");
}

namespace {

// Walks a lazily generated uniform permutation, keeping nonzero columns until `count` are found.
std::vector<Eigen::Index> draw_nonzero_columns(const Eigen::MatrixXd& sample, std::size_t count, Rng& rng) {
  const auto n = static_cast<std::size_t>(sample.cols());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<Eigen::Index> picked;
  picked.reserve(count);
  for (std::size_t i = 0; i < n && picked.size() < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
    const auto col = static_cast<Eigen::Index>(perm[i]);
    if (sample.col(col).squaredNorm() > 0.0) picked.push_back(col);
  }
  return picked;
}

struct StoredCode {
  std::vector<Eigen::Index> index;
  std::vector<double> value;
};

StoredCode sparsify(const Eigen::VectorXd& a) {
  StoredCode s;
  for (Eigen::Index j = 0; j < a.size(); ++j)
    if (a(j) != 0.0) {
      s.index.push_back(j);
      s.value.push_back(a(j));
    }
  return s;
}

void accumulate(LearnerState& st, const StoredCode& code, const Eigen::Ref<const Eigen::VectorXd>& z, double sign) {
  for (std::size_t a = 0; a < code.index.size(); ++a) {
    const double va = sign * code.value[a];
    for (std::size_t b = 0; b < code.index.size(); ++b) st.A(code.index[a], code.index[b]) += va * code.value[b];
    st.B.col(code.index[a]) += va * z;
  }
}

// One sweep of block coordinate descent on the sphere: each column update is the exact
// minimizer of the quadratic surrogate in d_j under d_j^T d_j = 1.
void update_atoms(Eigen::MatrixXd& atoms, const LearnerState& st) {
  for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
    const double ajj = st.A(j, j);
    if (ajj < kDeadAtomThreshold) continue;
    Eigen::VectorXd u = atoms.col(j) + (st.B.col(j) - atoms * st.A.col(j)) / ajj;
    const double norm = u.norm();
    if (norm > 0.0) atoms.col(j) = u / norm;
  }
}

}  // namespace

Dictionary init_dictionary(const Eigen::MatrixXd& sample, std::size_t k, std::uint64_t seed) {
  if (static_cast<std::size_t>(sample.cols()) < k)
    throw ConfigError("init_dictionary: sample has " + std::to_string(sample.cols()) + " columns, fewer than k = " +
                      std::to_string(k));
  Rng rng(seed);
  const auto cols = draw_nonzero_columns(sample, k, rng);
  if (cols.size() < k)
    throw ConfigError("init_dictionary: sample has fewer than k = " + std::to_string(k) + " nonzero columns");
  Eigen::MatrixXd atoms(sample.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) atoms.col(static_cast<Eigen::Index>(j)) = sample.col(cols[j]);
  return Dictionary::normalized(std::move(atoms));
}

double empirical_risk(const Dictionary& d, const Eigen::MatrixXd& patches, double lambda, int max_steps) {
  if (patches.cols() == 0) return 0.0;
  EncoderConfig cfg;
  cfg.lambda = lambda;
  cfg.lars_max_steps = max_steps;
  const Encoder enc(d, cfg);
  std::vector<double> terms(static_cast<std::size_t>(patches.cols()));
#pragma omp parallel for schedule(dynamic, 32)
  for (Eigen::Index i = 0; i < patches.cols(); ++i) {
    const auto code = enc.encode(patches.col(i));
    terms[static_cast<std::size_t>(i)] =
        0.5 * (patches.col(i) - d.atoms() * code.values).squaredNorm() + lambda * code.values.lpNorm<1>();
  }
  return std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
}

Dictionary replace_dead_atoms(const Dictionary& d, const LearnerState& state, const Eigen::MatrixXd& sample,
                              std::uint64_t seed, std::size_t* replaced) {
  std::vector<Eigen::Index> dead;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d.size()); ++j)
    if (state.A(j, j) < kDeadAtomThreshold) dead.push_back(j);
  if (replaced) *replaced = 0;
  if (dead.empty()) return d;
  if (sample.rows() != static_cast<Eigen::Index>(d.dim()))
    throw ShapeError("replace_dead_atoms: sample dimension does not match dictionary");
  Rng rng(seed);
  const auto cols = draw_nonzero_columns(sample, dead.size(), rng);
  Eigen::MatrixXd atoms = d.atoms();
  for (std::size_t i = 0; i < cols.size(); ++i) atoms.col(dead[i]) = sample.col(cols[i]).normalized();
  if (replaced) *replaced = cols.size();
  return Dictionary(std::move(atoms));
}

LearnResult learn_dictionary(const Eigen::MatrixXd& patches, const LearnerConfig& cfg, const Eigen::MatrixXd* monitor,
                             const Dictionary* initial, const PassObserver& observer) {
  cfg.validate();
  if (patches.cols() == 0) throw ConfigError("learn_dictionary: empty patch stream");
  const auto m = static_cast<std::size_t>(patches.cols());
  const auto k = static_cast<Eigen::Index>(cfg.k);

  LearnResult res;
  res.dictionary = initial ? *initial : init_dictionary(patches, cfg.k, derive_seed(cfg.seed, "init"));
  if (res.dictionary.dim() != static_cast<std::size_t>(patches.rows()) || res.dictionary.size() != cfg.k)
    throw ShapeError("learn_dictionary: initial dictionary shape does not match the configuration");

  LearnerState& st = res.state;
  st.A = Eigen::MatrixXd::Zero(k, k);
  st.B = Eigen::MatrixXd::Zero(patches.rows(), k);
  st.lambda = cfg.lambda;
  st.batch_size = cfg.batch_size;

  EncoderConfig enc_cfg;
  enc_cfg.lambda = cfg.lambda;
  enc_cfg.lars_max_steps = cfg.lars_max_steps;

  if (monitor) res.monitor_risk.push_back(empirical_risk(res.dictionary, *monitor, cfg.lambda, cfg.lars_max_steps));

  std::vector<StoredCode> codes(m);
  std::vector<char> has_code(m, 0);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

  for (int pass = 0; pass < cfg.iterations; ++pass) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    Eigen::MatrixXd atoms = res.dictionary.atoms();
    for (std::size_t start = 0; start < m; start += cfg.batch_size) {
      const std::size_t stop = std::min(m, start + cfg.batch_size);
      const Encoder enc(Dictionary(atoms), enc_cfg);
      std::vector<StoredCode> fresh(stop - start);
#pragma omp parallel for schedule(dynamic, 16)
      for (std::size_t b = start; b < stop; ++b) fresh[b - start] = sparsify(enc.encode(patches.col(static_cast<Eigen::Index>(order[b]))).values);
      // Sequential merge keeps the accumulators independent of the thread count.
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const auto z = patches.col(static_cast<Eigen::Index>(i));
        if (has_code[i]) accumulate(st, codes[i], z, -1.0);
        codes[i] = std::move(fresh[b - start]);
        has_code[i] = 1;
        accumulate(st, codes[i], z, 1.0);
        ++st.seen;
      }
      update_atoms(atoms, st);
      res.dictionary = Dictionary(atoms);
    }

    // Rebuild the accumulators from the stored codes to drop the add/subtract round-off.
    st.A.setZero();
    st.B.setZero();
    double surrogate = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto z = patches.col(static_cast<Eigen::Index>(i));
      accumulate(st, codes[i], z, 1.0);
      Eigen::VectorXd r = z;
      double l1 = 0.0;
      for (std::size_t a = 0; a < codes[i].index.size(); ++a) {
        r -= codes[i].value[a] * atoms.col(codes[i].index[a]);
        l1 += std::abs(codes[i].value[a]);
      }
      surrogate += 0.5 * r.squaredNorm() + cfg.lambda * l1;
    }
    res.surrogate_risk.push_back(surrogate / static_cast<double>(m));

    std::size_t replaced = 0;
    res.dictionary = replace_dead_atoms(res.dictionary, st, patches,
                                        derive_seed(cfg.seed, "dead/" + std::to_string(pass)), &replaced);
    res.replaced_per_pass.push_back(replaced);
    st.iterations = pass + 1;
    if (monitor) res.monitor_risk.push_back(empirical_risk(res.dictionary, *monitor, cfg.lambda, cfg.lars_max_steps));
    if (observer) observer(pass, res.dictionary, st);
  }
  return res;
}

}  // namespace clickcode
