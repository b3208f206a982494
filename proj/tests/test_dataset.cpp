#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "clickcode/dataset.hpp"
#include "clickcode/error.hpp"
#include "clickcode/feature_cache.hpp"
#include "clickcode/synthetic.hpp"
#include "test_util.hpp"

using namespace clickcode;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p);
  os << s;
}

std::string csv_row(int id, int hyd, double r, double az, std::size_t n, double fill) {
  std::string row = std::to_string(id) + "," + std::to_string(hyd) + "," + std::to_string(r) + "," + std::to_string(az);
  for (std::size_t i = 0; i < n; ++i) row += "," + std::to_string(fill * static_cast<double>(i % 7));
  return row + "\n";
}

}  // namespace

TEST_CASE("csv with three clicks of 2000 samples") {
  testutil::TempDir dir("ds");
  std::string text = "n,2000\n";
  text += csv_row(10, 0, 100.0, 0.5, 2000, 0.1);
  text += csv_row(11, 1, 200.0, -0.5, 2000, 0.2);
  text += csv_row(12, 1, 300.0, 1.0, 2000, 0.3);
  write_text(dir / "c.csv", text);
  const auto data = load_clicks(dir / "c.csv", ClickFormat::csv);
  CHECK(data.size() == 3);
  CHECK(data.n() == 2000);
  CHECK(data[1].click_id == 11);
  CHECK(data[2].range_m == 300.0);
  CHECK(data.hydrophone_count() == 2);
  CHECK(data.per_hydrophone_counts().at(1) == 2);
  std::size_t total = 0;
  for (const auto& [id, c] : data.per_hydrophone_counts()) total += c;
  CHECK(total == data.size());
}

TEST_CASE("empty csv file is an empty dataset") {
  testutil::TempDir dir("ds");
  write_text(dir / "e.csv", "");
  const auto data = load_clicks(dir / "e.csv", ClickFormat::csv);
  CHECK(data.empty());
  CHECK(data.hydrophone_count() == 0);
}

TEST_CASE("short csv row is a shape error naming the record") {
  testutil::TempDir dir("ds");
  write_text(dir / "s.csv", "n,2000\n" + csv_row(0, 0, 1, 0, 2000, 1) + csv_row(1, 0, 1, 0, 1999, 1));
  try {
    load_clicks(dir / "s.csv", ClickFormat::csv);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("record 1") != std::string::npos);
  }
}

TEST_CASE("malformed csv sample is a format error") {
  testutil::TempDir dir("ds");
  write_text(dir / "m.csv", "n,3\n0,0,1,0,0.1,abc,0.3\n");
  CHECK_THROWS_AS(load_clicks(dir / "m.csv", ClickFormat::csv), FormatError);
  write_text(dir / "h.csv", "samples,3\n");
  CHECK_THROWS_AS(load_clicks(dir / "h.csv", ClickFormat::csv), FormatError);
  CHECK_THROWS_AS(load_clicks(dir / "missing.csv", ClickFormat::csv), IoError);
}

TEST_CASE("dataset rejects mixed lengths and bad labels") {
  std::vector<ClickRecord> clicks(2);
  clicks[0].samples.assign(5, 0.0);
  clicks[1].samples.assign(4, 0.0);
  CHECK_THROWS_AS((void)ClickDataset(clicks), ShapeError);
  clicks[1].samples.assign(5, 0.0);
  clicks[1].range_m = -1.0;
  CHECK_THROWS_AS((void)ClickDataset(clicks), ConfigError);
  clicks[1].range_m = 1.0;
  clicks[1].azimuth_rad = std::numbers::pi;
  CHECK_THROWS_AS((void)ClickDataset(clicks), ConfigError);
}

TEST_CASE("csv and binary click files round-trip exactly") {
  testutil::TempDir dir("ds");
  SyntheticConfig cfg;
  cfg.n = 300;
  const auto data = generate_synthetic(cfg, 7);
  for (auto fmt : {ClickFormat::csv, ClickFormat::binary}) {
    const auto path = dir / (fmt == ClickFormat::csv ? "x.csv" : "x.bin");
    save_clicks(data, path, fmt);
    const auto back = load_clicks(path, infer_click_format(path));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(back[i].samples == data[i].samples);
      CHECK(back[i].range_m == data[i].range_m);
      CHECK(back[i].azimuth_rad == data[i].azimuth_rad);
      CHECK(back[i].hydrophone_id == data[i].hydrophone_id);
      CHECK(back[i].click_id == data[i].click_id);
    }
  }
}

TEST_CASE("wav directory with sidecar is cropped and padded to n") {
  testutil::TempDir dir("wav");
  std::vector<double> longer(11), shorter(3);
  for (int i = 0; i < 11; ++i) longer[i] = (i - 5) / 8.0;
  for (int i = 0; i < 3; ++i) shorter[i] = 0.25 * (i + 1);
  write_wav_pcm16(dir / "a.wav", longer, 48000);
  write_wav_pcm16(dir / "b.wav", shorter, 48000);
  write_text(dir / "metadata.csv", "filename,hydrophone_id,range_m,azimuth_rad\na.wav,2,150.5,0.25\nb.wav,3,99,-1\n");
  const auto data = load_clicks(dir.path(), ClickFormat::wav_directory, 6);
  REQUIRE(data.size() == 2);
  CHECK(data.n() == 6);
  CHECK(data[0].hydrophone_id == 2);
  CHECK(data[0].range_m == 150.5);
  CHECK(data[1].azimuth_rad == -1.0);
  // 11 -> 6 keeps samples 2..7; PCM16 quantization is within 1/32767.
  for (int i = 0; i < 6; ++i) CHECK(std::abs(data[0].samples[i] - longer[i + 2]) < 1.0 / 32767 + 1e-12);
  // 3 -> 6 pads one zero left, two right.
  const std::vector<double> expect{0, 0.25, 0.5, 0.75, 0, 0};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(data[1].samples[i] - expect[i]) < 1.0 / 32767 + 1e-12);
}

TEST_CASE("wav directory without sidecar is an io error") {
  testutil::TempDir dir("wav");
  write_wav_pcm16(dir / "a.wav", {0.1, 0.2}, 8000);
  CHECK_THROWS_AS(load_clicks(dir.path(), ClickFormat::wav_directory, 4), IoError);
}

TEST_CASE("fit_to_length crop and pad") {
  CHECK(fit_to_length({1, 2, 3, 4, 5}, 3) == std::vector<double>{2, 3, 4});
  CHECK(fit_to_length({1, 2, 3, 4}, 3) == std::vector<double>{1, 2, 3});
  CHECK(fit_to_length({1}, 4) == std::vector<double>{0, 1, 0, 0});
  CHECK(fit_to_length({1, 2}, 2) == std::vector<double>{1, 2});
}

TEST_CASE("synthetic generation is a pure function of config and count") {
  SyntheticConfig cfg;
  cfg.n = 500;
  const auto a = generate_synthetic(cfg, 20);
  const auto b = generate_synthetic(cfg, 20);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].samples == b[i].samples);
    CHECK(a[i].range_m == b[i].range_m);
    CHECK(a[i].azimuth_rad == b[i].azimuth_rad);
  }
  cfg.rng_seed = 2;
  const auto c = generate_synthetic(cfg, 20);
  CHECK(c[0].samples != a[0].samples);
  CHECK(generate_synthetic(cfg, 0).empty());
}

TEST_CASE("synthetic labels stay within bounds and hydrophones are balanced") {
  SyntheticConfig cfg;
  cfg.n = 200;
  cfg.hydrophone_count = 4;
  const auto d = generate_synthetic(cfg, 40);
  for (const auto& c : d.clicks()) {
    CHECK(c.range_m >= cfg.range_bounds_m.first);
    CHECK(c.range_m < cfg.range_bounds_m.second);
    CHECK(c.azimuth_rad >= -std::numbers::pi);
    CHECK(c.azimuth_rad < std::numbers::pi);
  }
  for (const auto& [id, count] : d.per_hydrophone_counts()) CHECK(count == 10);
}

TEST_CASE("synthetic waveform parameters are monotone in the labels") {
  SyntheticConfig cfg;
  const auto near = pulse_train_params(cfg, 500.0, 0.0);
  const auto far = pulse_train_params(cfg, 3000.0, 0.0);
  CHECK(far.amplitude < near.amplitude);
  CHECK(far.cutoff_hz < near.cutoff_hz);
  CHECK(far.lowpass_coeff < near.lowpass_coeff);
  CHECK(near.amplitude == doctest::Approx(std::exp(-500.0 / cfg.attenuation_length_m)));
  const auto left = pulse_train_params(cfg, 1000.0, -2.0);
  const auto right = pulse_train_params(cfg, 1000.0, 2.0);
  CHECK(left.ipi_samples < right.ipi_samples);
  CHECK(right.ipi_samples == doctest::Approx(cfg.base_ipi_samples * (1 + 0.5 * 2.0 / std::numbers::pi)));
}

TEST_CASE("noise-free envelope decays faster with range") {
  SyntheticConfig cfg;
  cfg.noise_std = 0.0;
  const auto near = synthesize_click(cfg, 400.0, 0.0, 500);
  const auto far = synthesize_click(cfg, 3500.0, 0.0, 500);
  auto peak = [](const std::vector<double>& s) {
    double m = 0;
    for (double v : s) m = std::max(m, std::abs(v));
    return m;
  };
  CHECK(peak(far) < peak(near));
  auto energy = [](const std::vector<double>& s) {
    double e = 0;
    for (double v : s) e += v * v;
    return e;
  };
  CHECK(energy(far) < energy(near));
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.noise_std = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.range_bounds_m = {10, 5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.range_bounds_m = {-1, 5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.pulse_count_base = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("feature cache round-trips exactly") {
  testutil::TempDir dir("fc");
  std::mt19937_64 rng(3);
  FeatureSet set;
  set.features = testutil::gaussian(9, 5, rng);
  for (int i = 0; i < 9; ++i) set.labels.push_back({100.0 * i, 0.1 * i - 0.4});
  save_features(set, dir / "f.bin");
  const auto back = load_features(dir / "f.bin");
  CHECK(back.features == set.features);
  CHECK(back.labels == set.labels);
}

TEST_CASE("feature cache size follows the format") {
  testutil::TempDir dir("fc");
  FeatureSet set;
  set.features = Eigen::MatrixXd::Constant(100, 640, 0.5);
  set.labels.assign(100, Label{1.0, 0.0});
  save_features(set, dir / "f.bin");
  // 4 magic + 4 count + 4 d + 100*640*8 + 100*2*8
  CHECK(std::filesystem::file_size(dir / "f.bin") == 513612u);
}

TEST_CASE("feature cache rejects a wrong magic header") {
  testutil::TempDir dir("fc");
  {
    std::ofstream os(dir / "bad.bin", std::ios::binary);
    os.write("XXXX\0\0\0\0\0\0\0\0", 12);
  }
  CHECK_THROWS_AS(load_features(dir / "bad.bin"), FormatError);
}

TEST_CASE("feature cache rejects a truncated body") {
  testutil::TempDir dir("fc");
  FeatureSet set;
  set.features = Eigen::MatrixXd::Ones(3, 2);
  set.labels.assign(3, Label{});
  save_features(set, dir / "f.bin");
  std::filesystem::resize_file(dir / "f.bin", 30);
  CHECK_THROWS_AS(load_features(dir / "f.bin"), IoError);
}

TEST_CASE("feature index sidecar round-trips") {
  testutil::TempDir dir("fc");
  FeatureSet set;
  set.features = Eigen::MatrixXd::Zero(3, 1);
  set.labels.assign(3, Label{});
  set.click_ids = {5, 6, 9};
  set.hydrophone_ids = {0, 2, 2};
  save_features(set, dir / "f.bin");
  save_feature_index(set, feature_index_path(dir / "f.bin"));
  auto back = load_features(dir / "f.bin");
  load_feature_index(back, feature_index_path(dir / "f.bin"));
  CHECK(back.click_ids == set.click_ids);
  CHECK(back.hydrophone_ids == set.hydrophone_ids);
}
