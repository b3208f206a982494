#include "clickcode/pooling.hpp"

#include <algorithm>
#include <cmath>

#include "clickcode/error.hpp"
#include "text_util.hpp"

namespace clickcode {

namespace {
// Ratios such as 1/3 are not exact in binary; the slack keeps floor() on the intended side.
constexpr double kFloorSlack = 1e-9;

std::size_t floor_slack(double x) { return static_cast<std::size_t>(std::floor(x + kFloorSlack)); }
}  // namespace

std::size_t PyramidSpec::roi_count(const PyramidLayer& layer) {
  return floor_slack((1.0 - layer.a) / layer.b + 1.0);
}

std::size_t PyramidSpec::total_rois() const {
  std::size_t d = 0;
  for (const auto& l : layers) d += roi_count(l);
  return d;
}

void PyramidSpec::validate() const {
  if (layers.empty()) throw ConfigError("pyramid: at least one layer is required");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "pyramid layer " + std::to_string(i);
    if (!(l.a > 0 && l.a <= 1)) throw ConfigError(where + ": a must lie in (0, 1]");
    if (!(l.b > 0 && l.b <= 1)) throw ConfigError(where + ": b must lie in (0, 1]");
    if (!(l.omega > 0)) throw ConfigError(where + ": omega must be > 0");
    if (roi_count(l) < 1) throw ConfigError(where + ": yields no ROI");
  }
}

PyramidSpec PyramidSpec::whole() { return PyramidSpec{{{1.0, 1.0, 1.0}}}; }

PyramidSpec PyramidSpec::whole_plus_thirds() {
  return PyramidSpec{{{1.0, 1.0, 1.0}, {1.0 / 3.0, 1.0 / 3.0, 1.0}}};
}

PyramidLayer parse_pyramid_layer(const std::string& row) {
  auto fields = detail::split(row, ',');
  if (fields.size() != 3) throw ConfigError("pyramid layer '" + row + "': expected a,b,omega");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    auto f = detail::trim(fields[static_cast<std::size_t>(i)]);
    auto slash = f.find('/');
    std::optional<double> x;
    if (slash == std::string_view::npos) {
      x = detail::parse_double(f);
    } else {
      auto num = detail::parse_double(f.substr(0, slash));
      auto den = detail::parse_double(f.substr(slash + 1));
      if (num && den && *den != 0.0) x = *num / *den;
    }
    if (!x) throw ConfigError("pyramid layer '" + row + "': cannot parse '" + std::string(f) + "'");
    v[i] = *x;
  }
  return {v[0], v[1], v[2]};
}

std::vector<Roi> compute_rois(std::size_t n, const PyramidSpec& spec) {
  if (n < 1) throw ConfigError("compute_rois: n must be >= 1");
  spec.validate();
  std::vector<Roi> rois;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const std::size_t length = floor_slack(l.a * static_cast<double>(n));
    if (length == 0) throw ConfigError("pyramid layer " + std::to_string(i) + ": ROI length floor(a n) is 0");
    const std::size_t shift = floor_slack(l.b * static_cast<double>(n));
    const std::size_t count = PyramidSpec::roi_count(l);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t start = std::min(j * shift, n - length);
      rois.push_back({i, start, length, l.omega});
    }
  }
  return rois;
}

double pool_lmu(std::span<const double> v, double mu) {
  if (mu == 0.0) throw ConfigError("pool_lmu: mu must be nonzero");
  if (!std::isfinite(mu)) throw ConfigError("pool_lmu: mu must be finite");
  if (mu == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  if (v.empty()) return 0.0;
  if (mu > 0) {
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    if (mx == 0.0) return 0.0;
    double s = 0.0;
    for (double x : v)
      if (x != 0.0) s += std::pow(std::abs(x) / mx, mu);
    return mx * std::pow(s, 1.0 / mu);
  }
  // Negative exponents: any zero entry drives the sum to infinity and the result to 0.
  double mn = std::numeric_limits<double>::infinity();
  for (double x : v) mn = std::min(mn, std::abs(x));
  if (mn == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x) / mn, mu);
  return mn * std::pow(s, 1.0 / mu);
}

std::vector<GlobalFeature> pool_click_multi(const Eigen::MatrixXd& codes, std::span<const std::size_t> patch_offsets,
                                            std::size_t n, const PyramidSpec& spec, std::span<const double> mus,
                                            std::int64_t click_id) {
  if (static_cast<std::size_t>(codes.cols()) != patch_offsets.size())
    throw ShapeError("pool_click: " + std::to_string(codes.cols()) + " code columns but " +
                     std::to_string(patch_offsets.size()) + " patch offsets");
  for (double mu : mus)
    if (mu == 0.0) throw ConfigError("pool_click: mu must be nonzero");
  const auto rois = compute_rois(n, spec);
  const auto k = codes.rows();
  std::vector<GlobalFeature> out(mus.size());
  for (auto& f : out) {
    f.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rois.size()) * k);
    f.click_id = click_id;
  }
  std::vector<Eigen::Index> members;
  std::vector<double> responses;
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const auto& roi = rois[r];
    members.clear();
    for (std::size_t l = 0; l < patch_offsets.size(); ++l)
      if (patch_offsets[l] >= roi.start && patch_offsets[l] < roi.start + roi.length)
        members.push_back(static_cast<Eigen::Index>(l));
    if (members.empty()) continue;
    responses.resize(members.size());
    for (Eigen::Index j = 0; j < k; ++j) {
      for (std::size_t m = 0; m < members.size(); ++m) responses[m] = codes(j, members[m]);
      for (std::size_t q = 0; q < mus.size(); ++q)
        out[q].values(static_cast<Eigen::Index>(r) * k + j) = roi.weight * pool_lmu(responses, mus[q]);
    }
  }
  return out;
}

GlobalFeature pool_click(const Eigen::MatrixXd& codes, std::span<const std::size_t> patch_offsets, std::size_t n,
                         const PyramidSpec& spec, double mu, std::int64_t click_id) {
  const double mus[] = {mu};
  return std::move(pool_click_multi(codes, patch_offsets, n, spec, mus, click_id).front());
}

}  // namespace clickcode
