#include "clickcode/patching.hpp"

#include <algorithm>
#include <numeric>

#include "binary_io.hpp"
#include "clickcode/error.hpp"

namespace clickcode {

void PatchConfig::validate(std::size_t n) const {
  if (p < 1) throw ConfigError("patch.p must be >= 1");
  if (p > n) throw ConfigError("patch.p (" + std::to_string(p) + ") exceeds click length n (" + std::to_string(n) + ")");
  if (L < 1) throw ConfigError("patch.L must be >= 1");
  if (pca_enabled() && pca_dims > p) throw ConfigError("patch.pca_dims must be <= patch.p");
}

std::vector<std::size_t> patch_offsets(std::size_t n, const PatchConfig& cfg) {
  cfg.validate(n);
  const std::size_t stride = (n + cfg.L - 1) / cfg.L;
  const std::size_t last = n - cfg.p;
  std::vector<std::size_t> out(cfg.L);
  for (std::size_t l = 0; l < cfg.L; ++l) out[l] = std::min(l * stride, last);
  return out;
}

PatchMatrix extract_patches(std::span<const double> samples, const PatchConfig& cfg, std::int64_t click_id) {
  PatchMatrix out;
  out.offsets = patch_offsets(samples.size(), cfg);
  out.source_click_id = click_id;
  out.columns.resize(static_cast<Eigen::Index>(cfg.p), static_cast<Eigen::Index>(cfg.L));
  const Eigen::Map<const Eigen::VectorXd> signal(samples.data(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t l = 0; l < cfg.L; ++l) {
    auto col = out.columns.col(static_cast<Eigen::Index>(l));
    col = signal.segment(static_cast<Eigen::Index>(out.offsets[l]), static_cast<Eigen::Index>(cfg.p));
    if (cfg.center) col.array() -= col.mean();
    const double norm = col.norm();
    if (norm > 0.0) col /= norm;
  }
  return out;
}

PatchMatrix extract_patches(const ClickRecord& click, const PatchConfig& cfg) {
  return extract_patches(click.samples, cfg, click.click_id);
}

PcaModel fit_pca(const Eigen::MatrixXd& sample, std::size_t p_prime) {
  const auto p = static_cast<std::size_t>(sample.rows());
  const auto count = static_cast<std::size_t>(sample.cols());
  if (p_prime < 1 || p_prime > p) throw ConfigError("fit_pca: p' must lie in [1, p]");
  if (count < p_prime) throw ConfigError("fit_pca: sample count must be >= p'");

  PcaModel model;
  model.mean = sample.rowwise().mean();
  const Eigen::MatrixXd centered = sample.colwise() - model.mean;
  const double denom = count > 1 ? static_cast<double>(count - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered * centered.transpose()) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("fit_pca: eigen-decomposition failed");
  // Eigen returns ascending eigenvalues.
  const auto& values = eig.eigenvalues();
  const auto& vectors = eig.eigenvectors();
  const double top = std::max(values.maxCoeff(), 0.0);
  const double floor = 1e-12 * std::max(top, 1.0);

  model.basis.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p_prime));
  model.explained_variance.resize(static_cast<Eigen::Index>(p_prime));
  for (std::size_t j = 0; j < p_prime; ++j) {
    const auto src = static_cast<Eigen::Index>(p - 1 - j);
    Eigen::VectorXd v = vectors.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    model.basis.col(static_cast<Eigen::Index>(j)) = v;
    double var = values(src);
    if (var <= floor) {
      var = 0.0;
      model.degenerate = true;
    }
    model.explained_variance(static_cast<Eigen::Index>(j)) = var;
  }
  return model;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& columns, const PcaModel& model) {
  if (static_cast<std::size_t>(columns.rows()) != model.input_dim())
    throw ShapeError("project: patch dimension " + std::to_string(columns.rows()) + " does not match PCA input " +
                     std::to_string(model.input_dim()));
  return model.basis.transpose() * (columns.colwise() - model.mean);
}

PatchMatrix project(const PatchMatrix& patches, const PcaModel& model) {
  PatchMatrix out;
  out.columns = project(patches.columns, model);
  out.offsets = patches.offsets;
  out.source_click_id = patches.source_click_id;
  return out;
}

namespace {
constexpr std::string_view kPcaMagic = "CCP1";
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  auto os = detail::open_out(path.string());
  detail::write_magic(os, kPcaMagic);
  detail::write_u32(os, static_cast<std::uint32_t>(model.input_dim()));
  detail::write_u32(os, static_cast<std::uint32_t>(model.output_dim()));
  detail::write_f64s(os, model.mean.data(), static_cast<std::size_t>(model.mean.size()));
  detail::write_f64s(os, model.basis.data(), static_cast<std::size_t>(model.basis.size()));
  detail::write_f64s(os, model.explained_variance.data(), static_cast<std::size_t>(model.explained_variance.size()));
  detail::finish_write(os, path.string());
}

PcaModel load_pca(const std::filesystem::path& path) {
  auto is = detail::open_in(path.string());
  const std::string what = path.string();
  detail::expect_magic(is, kPcaMagic, what);
  const auto p = detail::read_u32(is, what);
  const auto pp = detail::read_u32(is, what);
  PcaModel m;
  m.mean.resize(p);
  m.basis.resize(p, pp);
  m.explained_variance.resize(pp);
  detail::read_f64s(is, m.mean.data(), p, what);
  detail::read_f64s(is, m.basis.data(), static_cast<std::size_t>(p) * pp, what);
  detail::read_f64s(is, m.explained_variance.data(), pp, what);
  m.degenerate = (m.explained_variance.array() == 0.0).any();
  return m;
}

}  // namespace clickcode
