#include "clickcode/feature_cache.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "clickcode/error.hpp"
#include "text_util.hpp"

namespace clickcode {

namespace fs = std::filesystem;

namespace {
constexpr std::string_view kMagic = "CCF1";
}

void save_features(const FeatureSet& set, const fs::path& path) {
  if (static_cast<std::size_t>(set.features.rows()) != set.labels.size())
    throw ShapeError("save_features: " + std::to_string(set.features.rows()) + " feature rows but " +
                     std::to_string(set.labels.size()) + " labels");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto os = detail::open_out(path.string());
  detail::write_magic(os, kMagic);
  detail::write_u32(os, static_cast<std::uint32_t>(set.features.rows()));
  detail::write_u32(os, static_cast<std::uint32_t>(set.features.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = set.features;
  detail::write_f64s(os, rows.data(), static_cast<std::size_t>(rows.size()));
  for (const auto& l : set.labels) {
    detail::write_f64(os, l.range_m);
    detail::write_f64(os, l.azimuth_rad);
  }
  detail::finish_write(os, path.string());
}

FeatureSet load_features(const fs::path& path) {
  auto is = detail::open_in(path.string());
  const std::string what = path.string();
  detail::expect_magic(is, kMagic, what);
  const auto count = detail::read_u32(is, what);
  const auto d = detail::read_u32(is, what);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(count, d);
  detail::read_f64s(is, rows.data(), static_cast<std::size_t>(count) * d, what);
  FeatureSet set;
  set.features = rows;
  set.labels.resize(count);
  for (auto& l : set.labels) {
    l.range_m = detail::read_f64(is, what);
    l.azimuth_rad = detail::read_f64(is, what);
  }
  return set;
}

fs::path feature_index_path(const fs::path& cache) {
  auto p = cache;
  p += ".ids.csv";
  return p;
}

void save_feature_index(const FeatureSet& set, const fs::path& path) {
  if (set.click_ids.size() != set.size() || set.hydrophone_ids.size() != set.size())
    throw ShapeError("save_feature_index: id vectors do not match feature count");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "click_id,hydrophone_id\n";
  for (std::size_t i = 0; i < set.size(); ++i) os << set.click_ids[i] << ',' << set.hydrophone_ids[i] << '\n';
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

void load_feature_index(FeatureSet& set, const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(is, line);
  if (detail::trim(line) != "click_id,hydrophone_id") throw FormatError(path.string() + ": bad header");
  set.click_ids.clear();
  set.hydrophone_ids.clear();
  while (std::getline(is, line)) {
    auto t = detail::trim(line);
    if (t.empty()) continue;
    auto f = detail::split(t, ',');
    auto id = f.size() == 2 ? detail::parse_int<std::int64_t>(f[0]) : std::nullopt;
    auto h = f.size() == 2 ? detail::parse_int<int>(f[1]) : std::nullopt;
    if (!id || !h) throw FormatError(path.string() + ": malformed row " + std::to_string(set.click_ids.size()));
    set.click_ids.push_back(*id);
    set.hydrophone_ids.push_back(*h);
  }
  if (set.click_ids.size() != set.size())
    throw ShapeError(path.string() + ": " + std::to_string(set.click_ids.size()) + " rows for " +
                     std::to_string(set.size()) + " features");
}

}  // namespace clickcode
