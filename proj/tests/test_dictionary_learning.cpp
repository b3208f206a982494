#include <doctest.h>

#include <cmath>

#include "clickcode/dictionary_learning.hpp"
#include "clickcode/error.hpp"
#include "test_util.hpp"

using namespace clickcode;

namespace {

bool unit_norm(const Dictionary& d) {
  for (Eigen::Index j = 0; j < d.atoms().cols(); ++j)
    if (std::abs(d.atoms().col(j).squaredNorm() - 1.0) > 1e-10) return false;
  return true;
}

/// Columns drawn as sparse combinations of a hidden dictionary.
Eigen::MatrixXd sparse_mixture(const Eigen::MatrixXd& d0, Eigen::Index m, std::mt19937_64& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, d0.cols() - 1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(d0.rows(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int s = 0; s < 3; ++s) x.col(i) += g(rng) * d0.col(pick(rng));
    x.col(i) += 0.01 * testutil::gaussian(d0.rows(), 1, rng);
    x.col(i).normalize();
  }
  return x;
}

}  // namespace

TEST_CASE("init picks distinct renormalized sample columns deterministically") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = 3.0 * testutil::gaussian(6, 50, rng);
  const auto a = init_dictionary(x, 10, 42);
  const auto b = init_dictionary(x, 10, 42);
  CHECK(a == b);
  CHECK(unit_norm(a));
  for (Eigen::Index j = 0; j < 10; ++j) {
    bool found = false;
    for (Eigen::Index i = 0; i < x.cols(); ++i) found = found || (a.atoms().col(j) - x.col(i).normalized()).norm() < 1e-14;
    CHECK(found);
    for (Eigen::Index i = 0; i < j; ++i) CHECK(a.atoms().col(i) != a.atoms().col(j));
  }
  CHECK_FALSE(init_dictionary(x, 10, 43) == a);
}

TEST_CASE("init with fewer samples than atoms is an error") {
  CHECK_THROWS_AS(init_dictionary(Eigen::MatrixXd::Ones(4, 10), 128, 1), ConfigError);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 20);
  x.col(0).setOnes();
  CHECK_THROWS_AS(init_dictionary(x, 2, 1), ConfigError);
}

TEST_CASE("dead atom replacement") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = testutil::gaussian(5, 40, rng);
  const auto d = init_dictionary(x, 6, 3);
  LearnerState st;
  st.A = Eigen::MatrixXd::Identity(6, 6);
  st.B = Eigen::MatrixXd::Zero(5, 6);
  std::size_t replaced = 99;
  CHECK(replace_dead_atoms(d, st, x, 4, &replaced) == d);
  CHECK(replaced == 0);

  st.A(2, 2) = 0.0;
  const auto one = replace_dead_atoms(d, st, x, 4, &replaced);
  CHECK(replaced == 1);
  CHECK(unit_norm(one));
  int changed = 0;
  for (Eigen::Index j = 0; j < 6; ++j) changed += one.atoms().col(j) != d.atoms().col(j);
  CHECK(changed == 1);
  CHECK(one.atoms().col(2) != d.atoms().col(2));

  st.A.setZero();
  CHECK(replace_dead_atoms(d, st, x, 4, &replaced) == init_dictionary(x, 6, 4));
  CHECK(replaced == 6);
}

TEST_CASE("learning an orthonormal dictionary lowers the empirical risk") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd q = testutil::random_orthogonal(8, rng);
  Eigen::MatrixXd x(8, 8 * 40);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < x.cols(); ++i) x.col(i) = q.col(i % 8) * (g(rng) > 0 ? 1.0 : -1.0);
  LearnerConfig cfg;
  cfg.k = 8;
  cfg.lambda = 0.2;
  cfg.iterations = 15;
  cfg.batch_size = 32;
  cfg.seed = 5;
  Eigen::MatrixXd random_atoms = testutil::gaussian(8, 8, rng);
  const auto random_init = Dictionary::normalized(random_atoms);
  const auto result = learn_dictionary(x, cfg, nullptr, &random_init);
  const double before = empirical_risk(random_init, x, cfg.lambda);
  const double after = empirical_risk(result.dictionary, x, cfg.lambda);
  CHECK(after <= before);
  // Each sample needs one atom: the optimum is 0.5 * 0.2^2 + 0.2 * 0.8 per column.
  CHECK(after < 0.25);
}

TEST_CASE("monitored risk is non-increasing and atoms stay unit norm") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd d0 = testutil::unit_columns(testutil::gaussian(12, 20, rng));
  const Eigen::MatrixXd train = sparse_mixture(d0, 8000, rng);
  const Eigen::MatrixXd monitor = sparse_mixture(d0, 200, rng);
  LearnerConfig cfg;
  cfg.k = 16;
  cfg.iterations = 15;
  cfg.batch_size = 128;
  cfg.seed = 9;
  const auto result = learn_dictionary(train, cfg, &monitor);
  REQUIRE(result.monitor_risk.size() == 16);
  for (std::size_t i = 1; i < result.monitor_risk.size(); ++i)
    CHECK(result.monitor_risk[i] <= result.monitor_risk[i - 1] + 1e-6 * result.monitor_risk.front());
  CHECK(result.monitor_risk.back() < result.monitor_risk.front());
  CHECK(unit_norm(result.dictionary));
  CHECK(result.state.iterations == 15);
  CHECK(result.state.seen == 15u * 8000u);
  CHECK(result.surrogate_risk.size() == 15);
}

TEST_CASE("accumulator A is symmetric positive semidefinite") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = testutil::unit_columns(testutil::gaussian(6, 300, rng));
  LearnerConfig cfg;
  cfg.k = 8;
  cfg.iterations = 3;
  cfg.batch_size = 50;
  const auto r = learn_dictionary(x, cfg);
  CHECK((r.state.A - r.state.A.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.state.A);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("learning is deterministic per seed") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = testutil::unit_columns(testutil::gaussian(6, 400, rng));
  LearnerConfig cfg;
  cfg.k = 10;
  cfg.iterations = 4;
  cfg.batch_size = 64;
  cfg.seed = 77;
  CHECK(learn_dictionary(x, cfg).dictionary == learn_dictionary(x, cfg).dictionary);
}

TEST_CASE("all-zero batches leave atoms unchanged") {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 100);
  x.leftCols(8) = testutil::unit_columns(testutil::gaussian(5, 8, rng));
  const auto init = init_dictionary(x, 4, 1);
  Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(5, 64);
  LearnerConfig cfg;
  cfg.k = 4;
  cfg.iterations = 2;
  cfg.batch_size = 16;
  // Dead atoms cannot be replaced from an all-zero sample, so the dictionary stays put.
  const auto r = learn_dictionary(zeros, cfg, nullptr, &init);
  CHECK(r.dictionary == init);
}

TEST_CASE("learner preconditions") {
  LearnerConfig cfg;
  cfg.k = 10;
  CHECK_THROWS_AS(learn_dictionary(Eigen::MatrixXd::Ones(4, 0), cfg), ConfigError);
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lambda = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
