#include <doctest.h>

#include <cmath>

#include "clickcode/error.hpp"
#include "clickcode/patching.hpp"
#include "clickcode/synthetic.hpp"
#include "test_util.hpp"

using namespace clickcode;

TEST_CASE("offsets for n=10, p=4, L=4 clamp the last patch") {
  PatchConfig cfg{4, 4, 0, false};
  CHECK(patch_offsets(10, cfg) == std::vector<std::size_t>{0, 3, 6, 6});
}

TEST_CASE("default geometry strides by two samples") {
  PatchConfig cfg;
  const auto off = patch_offsets(2000, cfg);
  REQUIRE(off.size() == 1000);
  CHECK(off[1] - off[0] == 2);
  CHECK(off[100] == 200);
  CHECK(off.back() == 2000 - 128);
}

TEST_CASE("offsets are non-decreasing and in range for many configs") {
  for (std::size_t n : {1u, 7u, 64u, 300u, 2000u})
    for (std::size_t p : {1u, 3u, 64u, 128u})
      for (std::size_t L : {1u, 2u, 9u, 1000u, 5000u}) {
        if (p > n) continue;
        PatchConfig cfg{p, L, 0, false};
        const auto off = patch_offsets(n, cfg);
        REQUIRE(off.size() == L);
        for (std::size_t l = 0; l < L; ++l) {
          CHECK(off[l] <= n - p);
          if (l) CHECK(off[l] >= off[l - 1]);
        }
      }
}

TEST_CASE("patches are unit norm or zero") {
  SyntheticConfig syn;
  syn.n = 700;
  const auto data = generate_synthetic(syn, 3);
  PatchConfig cfg{64, 200, 0, false};
  for (const auto& c : data.clicks()) {
    const auto pm = extract_patches(c, cfg);
    REQUIRE(pm.columns.cols() == 200);
    REQUIRE(pm.columns.rows() == 64);
    CHECK(pm.source_click_id == c.click_id);
    for (Eigen::Index j = 0; j < pm.columns.cols(); ++j) {
      const double nrm = pm.columns.col(j).norm();
      CHECK((nrm == 0.0 || std::abs(nrm - 1.0) <= 1e-12));
    }
  }
}

TEST_CASE("patch content matches the source window") {
  std::vector<double> s(10);
  for (int i = 0; i < 10; ++i) s[i] = i + 1.0;
  PatchConfig cfg{4, 4, 0, false};
  const auto pm = extract_patches(s, cfg);
  Eigen::Vector4d w(7, 8, 9, 10);
  CHECK((pm.columns.col(2) - w.normalized()).norm() < 1e-15);
  CHECK(pm.offsets == std::vector<std::size_t>{0, 3, 6, 6});
}

TEST_CASE("zero click gives zero patches without NaN") {
  std::vector<double> s(50, 0.0);
  PatchConfig cfg{8, 10, 0, false};
  const auto pm = extract_patches(s, cfg);
  CHECK(pm.columns.isZero(0));
  CHECK(pm.columns.allFinite());
}

TEST_CASE("centering subtracts the patch mean first") {
  std::vector<double> s{1, 1, 1, 1, 2, 4};
  PatchConfig cfg{3, 2, 0, true};
  const auto pm = extract_patches(s, cfg);
  CHECK(pm.columns.col(0).isZero(0));  // constant window centers to zero
  CHECK(std::abs(pm.columns.col(1).sum()) < 1e-12);
  CHECK(pm.columns.col(1).norm() == doctest::Approx(1.0));
}

TEST_CASE("patch size larger than the click is a configuration error") {
  std::vector<double> s(10, 1.0);
  CHECK_THROWS_AS(extract_patches(s, PatchConfig{11, 2, 0, false}), ConfigError);
  CHECK_THROWS_AS(PatchConfig({4, 0, 0, false}).validate(10), ConfigError);
  CHECK_THROWS_AS(PatchConfig({4, 2, 5, false}).validate(10), ConfigError);
  CHECK_NOTHROW(PatchConfig({4, 2, 4, false}).validate(10));
}

TEST_CASE("pca on rank-2 data recovers the subspace") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd basis = testutil::random_orthogonal(8, rng).leftCols(2);
  const Eigen::MatrixXd coeff = testutil::gaussian(2, 300, rng);
  Eigen::MatrixXd x = basis * coeff;
  x.colwise() += Eigen::VectorXd::LinSpaced(8, -1, 1);
  const auto model = fit_pca(x, 2);
  CHECK_FALSE(model.degenerate);
  CHECK((model.basis.transpose() * model.basis - Eigen::Matrix2d::Identity()).norm() < 1e-10);
  CHECK(model.explained_variance[0] >= model.explained_variance[1]);
  const Eigen::MatrixXd y = project(x, model);
  REQUIRE(y.rows() == 2);
  Eigen::MatrixXd recon = model.basis * y;
  recon.colwise() += model.mean;
  CHECK((recon - x).cwiseAbs().maxCoeff() < 1e-10);

  const auto wide = fit_pca(x, 4);
  CHECK(wide.explained_variance[2] < 1e-10);
  CHECK(wide.explained_variance[3] < 1e-10);
  CHECK(wide.degenerate);
}

TEST_CASE("pca with p' = p is an isometry") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = testutil::gaussian(6, 50, rng);
  const auto model = fit_pca(x, 6);
  CHECK((model.basis.transpose() * model.basis - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-10);
  const Eigen::MatrixXd y = project(x, model);
  for (int i = 0; i < 20; ++i) {
    const double a = (x.col(i) - x.col(i + 1)).norm();
    const double b = (y.col(i) - y.col(i + 1)).norm();
    CHECK(std::abs(a - b) < 1e-10);
  }
  for (Eigen::Index k = 1; k < 6; ++k) CHECK(model.explained_variance[k] <= model.explained_variance[k - 1]);
}

TEST_CASE("pca sign convention makes the largest entry positive") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x = testutil::gaussian(5, 40, rng);
  const auto a = fit_pca(x, 3);
  const auto b = fit_pca(-x, 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    Eigen::Index i;
    a.basis.col(j).cwiseAbs().maxCoeff(&i);
    CHECK(a.basis(i, j) > 0);
  }
  CHECK((a.basis - b.basis).norm() < 1e-8);
}

TEST_CASE("identical repeated patch is flagged degenerate") {
  Eigen::MatrixXd x = Eigen::VectorXd::LinSpaced(4, 0.1, 0.4).replicate(1, 10);
  const auto model = fit_pca(x, 2);
  CHECK(model.degenerate);
  CHECK(model.explained_variance.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(model.basis.allFinite());
}

TEST_CASE("pca preconditions") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  CHECK_THROWS_AS(fit_pca(x, 5), ConfigError);   // p' > p
  CHECK_THROWS_AS(fit_pca(x, 4), ConfigError);   // fewer samples than p'
}

TEST_CASE("identity model leaves patches unchanged") {
  PcaModel id;
  id.mean = Eigen::VectorXd::Zero(4);
  id.basis = Eigen::MatrixXd::Identity(4, 4);
  id.explained_variance = Eigen::VectorXd::Ones(4);
  std::vector<double> s{3, 1, 4, 1, 5, 9, 2, 6};
  const auto pm = extract_patches(s, PatchConfig{4, 3, 0, false});
  const auto out = project(pm, id);
  CHECK(out.columns == pm.columns);
  CHECK(out.offsets == pm.offsets);
}

TEST_CASE("projection with mismatched dimension is a shape error") {
  PcaModel m;
  m.mean = Eigen::VectorXd::Zero(4);
  m.basis = Eigen::MatrixXd::Identity(4, 2);
  m.explained_variance = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(project(Eigen::MatrixXd::Ones(5, 2), m), ShapeError);
}

TEST_CASE("pca model round-trips through its file") {
  testutil::TempDir dir("pca");
  std::mt19937_64 rng(2);
  const auto model = fit_pca(testutil::gaussian(6, 30, rng), 3);
  save_pca(model, dir / "m.pca");
  const auto back = load_pca(dir / "m.pca");
  CHECK(back.mean == model.mean);
  CHECK(back.basis == model.basis);
  CHECK(back.explained_variance == model.explained_variance);
}
