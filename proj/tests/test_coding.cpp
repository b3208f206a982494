#include <doctest.h>

#include <cmath>

#include "clickcode/coding.hpp"
#include "clickcode/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace clickcode;

namespace {

Dictionary random_dictionary(Eigen::Index p, Eigen::Index k, std::mt19937_64& rng) {
  return Dictionary::normalized(testutil::gaussian(p, k, rng));
}

void check_kkt(const Dictionary& d, const Eigen::VectorXd& z, const SparseCode& code, double lambda) {
  const Eigen::VectorXd corr = d.atoms().transpose() * (z - d.atoms() * code.values);
  for (Eigen::Index j = 0; j < corr.size(); ++j) {
    CHECK(std::abs(corr[j]) <= lambda + 1e-8);
    if (code.values[j] != 0.0) {
      CHECK(std::abs(std::abs(corr[j]) - lambda) <= 1e-6);
      CHECK((corr[j] > 0) == (code.values[j] > 0));
    }
  }
}

}  // namespace

TEST_CASE("dictionary requires unit-norm atoms") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  CHECK_NOTHROW(Dictionary{m});
  m(0, 0) = 1.001;
  CHECK_THROWS_AS(Dictionary{m}, ConfigError);
  CHECK_THROWS_AS(Dictionary::normalized(Eigen::MatrixXd::Zero(3, 2)), ConfigError);
  const auto d = Dictionary::normalized(Eigen::MatrixXd::Constant(4, 2, 3.0));
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(d.atoms().col(j).norm() - 1.0) < 1e-12);
}

TEST_CASE("dictionary file round-trips") {
  testutil::TempDir dir("dict");
  std::mt19937_64 rng(1);
  const auto d = random_dictionary(7, 5, rng);
  save_dictionary(d, dir / "d.bin");
  CHECK(load_dictionary(dir / "d.bin") == d);
  CHECK(std::filesystem::file_size(dir / "d.bin") == 12u + 7 * 5 * 8);
}

TEST_CASE("ols: identity dictionary returns the input") {
  const Dictionary d(Eigen::MatrixXd::Identity(5, 5));
  Eigen::VectorXd z(5);
  z << 1, -2, 3, 0.5, 0;
  CHECK((encode_ols(z, d).values - z).norm() < 1e-14);
}

TEST_CASE("ols: an atom is coded by its indicator") {
  std::mt19937_64 rng(2);
  const auto d = random_dictionary(8, 4, rng);
  const auto code = encode_ols(d.atoms().col(1), d);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(4);
  e[1] = 1;
  CHECK((code.values - e).norm() < 1e-10);
  CHECK((d.atoms() * code.values - d.atoms().col(1)).norm() < 1e-10);
}

TEST_CASE("ols matches a QR least-squares oracle") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto d = random_dictionary(8, 4, rng);
    const Eigen::VectorXd z = testutil::gaussian(8, 1, rng);
    const auto code = encode_ols(z, d);
    const Eigen::VectorXd ref = oracle::least_squares(d.atoms(), z);
    CHECK(std::abs((z - d.atoms() * code.values).norm() - (z - d.atoms() * ref).norm()) < 1e-10);
    CHECK_FALSE(code.degenerate);
  }
}

TEST_CASE("ols on a singular Gram returns the minimum-norm solution") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 1, 0, 0, 0, 1, 0, 0, 0;
  const Dictionary d{m};  // atoms 0 and 1 coincide
  Eigen::VectorXd z(3);
  z << 2, 3, 1;
  const auto code = encode_ols(z, d);
  CHECK(code.degenerate);
  const Eigen::VectorXd ref = oracle::least_squares(m, z);
  CHECK((code.values - ref).norm() < 1e-10);
  CHECK(std::abs(code.values[0] - code.values[1]) < 1e-10);
}

TEST_CASE("ridge: orthonormal columns and beta=1 halve the correlation") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd q = testutil::random_orthogonal(6, rng).leftCols(4);
  const Dictionary d{q};
  const Eigen::VectorXd z = testutil::gaussian(6, 1, rng);
  CHECK((encode_ridge(z, d, 1.0).values - q.transpose() * z / 2).norm() < 1e-12);
}

TEST_CASE("ridge matches an independent QR solve") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto d = random_dictionary(8, 12, rng);
    const Eigen::VectorXd z = testutil::gaussian(8, 1, rng);
    const double beta = std::pow(10.0, -3 + t % 5);
    const Eigen::VectorXd ref = oracle::ridge_qr(d.atoms(), z, beta);
    CHECK((encode_ridge(z, d, beta).values - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("ridge: huge beta shrinks to zero and beta must be positive") {
  std::mt19937_64 rng(6);
  const auto d = random_dictionary(5, 3, rng);
  const Eigen::VectorXd z = testutil::gaussian(5, 1, rng);
  const auto ols = encode_ols(z, d).values;
  CHECK(encode_ridge(z, d, 1e12).values.norm() <= 1e-6 * ols.norm());
  CHECK_THROWS_AS(encode_ridge(z, d, 0.0), ConfigError);
  CHECK_THROWS_AS(encode_ridge(z, d, -1.0), ConfigError);
}

TEST_CASE("lasso on an orthonormal dictionary is soft thresholding") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd q = testutil::random_orthogonal(10, rng);
    const Dictionary d{q};
    const Eigen::VectorXd z = testutil::gaussian(10, 1, rng);
    for (double lambda : {0.05, 0.2, 1.0}) {
      const auto code = encode_lasso(z, d, lambda);
      CHECK(code.converged);
      CHECK((code.values - oracle::soft_threshold(q.transpose() * z, lambda)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("lasso returns zero when lambda dominates every correlation") {
  std::mt19937_64 rng(8);
  const auto d = random_dictionary(6, 9, rng);
  const Eigen::VectorXd z = testutil::gaussian(6, 1, rng);
  const double cmax = (d.atoms().transpose() * z).cwiseAbs().maxCoeff();
  const auto code = encode_lasso(z, d, cmax * 1.0001);
  CHECK(code.values.isZero(0));
  CHECK(code.nnz == 0);
  CHECK(encode_lasso(Eigen::VectorXd::Zero(6), d, 0.2).values.isZero(0));
}

TEST_CASE("lasso satisfies KKT and matches coordinate descent on 16x32 problems") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 60; ++t) {
    const auto d = random_dictionary(16, 32, rng);
    const Eigen::VectorXd z = testutil::gaussian(16, 1, rng);
    const auto code = encode_lasso(z, d, 0.2);
    CHECK(code.converged);
    CHECK(code.nnz <= 16);
    check_kkt(d, z, code, 0.2);
    const double f = oracle::lasso_objective(d.atoms(), z, code.values, 0.2);
    const double g = oracle::lasso_objective(d.atoms(), z, oracle::lasso_cd(d.atoms(), z, 0.2), 0.2);
    CHECK(std::abs(f - g) <= 1e-6 * std::max(1.0, std::abs(g)));
  }
}

TEST_CASE("lasso stays optimal when small lambda saturates the active set") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 60; ++t) {
    const auto d = random_dictionary(16, 32, rng);
    const Eigen::VectorXd z = testutil::gaussian(16, 1, rng);
    for (double lambda : {0.01, 0.05}) {
      const auto code = encode_lasso(z, d, lambda);
      CHECK(code.converged);
      check_kkt(d, z, code, lambda);
      const double f = oracle::lasso_objective(d.atoms(), z, code.values, lambda);
      const double g = oracle::lasso_objective(d.atoms(), z, oracle::lasso_cd(d.atoms(), z, lambda), lambda);
      CHECK(std::abs(f - g) <= 1e-6 * std::max(1.0, std::abs(g)));
    }
  }
}

TEST_CASE("lasso handles repeated atoms") {
  Eigen::MatrixXd m(3, 4);
  m << 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  const Dictionary d{m};
  Eigen::VectorXd z(3);
  z << 2, 1, 0.5;
  const auto code = encode_lasso(z, d, 0.1);
  check_kkt(d, z, code, 0.1);
  const double f = oracle::lasso_objective(m, z, code.values, 0.1);
  const double g = oracle::lasso_objective(m, z, oracle::lasso_cd(m, z, 0.1), 0.1);
  CHECK(std::abs(f - g) < 1e-9);
}

TEST_CASE("lasso step limit reports non-convergence") {
  std::mt19937_64 rng(10);
  const auto d = random_dictionary(16, 32, rng);
  const Eigen::VectorXd z = testutil::gaussian(16, 1, rng);
  const auto code = encode_lasso(z, d, 1e-4, 2);
  CHECK_FALSE(code.converged);
  CHECK(code.values.allFinite());
}

TEST_CASE("lasso and ridge approach ols for small penalties") {
  std::mt19937_64 rng(11);
  const auto d = random_dictionary(20, 5, rng);
  const Eigen::VectorXd z = testutil::gaussian(20, 1, rng);
  const Eigen::VectorXd ols = encode_ols(z, d).values;
  CHECK((encode_lasso(z, d, 1e-7).values - ols).norm() < 1e-4);
  CHECK((encode_ridge(z, d, 1e-8).values - ols).norm() < 1e-4);
}

TEST_CASE("omp: single atom, zero input, full sparsity") {
  std::mt19937_64 rng(12);
  const auto d = random_dictionary(8, 5, rng);
  const auto code = encode_omp(d.atoms().col(3), d, 1);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
  e[3] = 1;
  CHECK(code.values == e);
  CHECK(encode_omp(Eigen::VectorXd::Zero(8), d, 3).values.isZero(0));
  const Eigen::VectorXd z = testutil::gaussian(8, 1, rng);
  CHECK((encode_omp(z, d, 5).values - encode_ols(z, d).values).norm() < 1e-8);
  const auto sparse = encode_omp(z, d, 2);
  CHECK(sparse.nnz <= 2);
  CHECK_THROWS_AS(encode_omp(z, d, 0), ConfigError);
  CHECK_THROWS_AS(encode_omp(z, d, 6), ConfigError);
}

TEST_CASE("encoder rejects mismatched input dimension") {
  const Encoder enc(Dictionary(Eigen::MatrixXd::Identity(4, 4)), EncoderConfig{});
  CHECK_THROWS_AS(enc.encode(Eigen::VectorXd::Ones(5)), ShapeError);
}

TEST_CASE("batch encoding equals per-column calls for every method") {
  std::mt19937_64 rng(13);
  const auto d = random_dictionary(16, 24, rng);
  PatchMatrix pm;
  pm.columns = testutil::unit_columns(testutil::gaussian(16, 1000, rng));
  pm.columns.col(7).setZero();
  for (auto method : {EncoderMethod::ols, EncoderMethod::ridge, EncoderMethod::lasso_lars, EncoderMethod::omp}) {
    EncoderConfig cfg;
    cfg.method = method;
    const Encoder enc(d, cfg);
    const Eigen::MatrixXd v = encode_batch(pm, enc);
    REQUIRE(v.cols() == 1000);
    REQUIRE(v.rows() == 24);
    CHECK(v.col(7).isZero(0));
    bool same = true;
    for (Eigen::Index j = 0; j < 1000; ++j) same = same && (v.col(j) == enc.encode(pm.columns.col(j)).values);
    CHECK(same);
    CHECK(encode_batch(pm, d, cfg) == v);
  }
  PatchMatrix zero;
  zero.columns = Eigen::MatrixXd::Zero(16, 10);
  CHECK(encode_batch(zero, d, EncoderConfig{}).isZero(0));
}

TEST_CASE("encoder config names") {
  CHECK(parse_encoder_method("lasso_lars") == EncoderMethod::lasso_lars);
  CHECK(parse_encoder_method("omp") == EncoderMethod::omp);
  CHECK(to_string(EncoderMethod::ridge) == "ridge");
  CHECK_THROWS_AS(parse_encoder_method("qp"), ConfigError);
  EncoderConfig cfg;
  cfg.lambda = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
