#include "clickcode/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

#include "clickcode/error.hpp"
#include "text_util.hpp"

namespace clickcode {

namespace fs = std::filesystem;

fs::path PipelineConfig::clicks_path() const { return paths.clicks.empty() ? paths.workdir / "clicks.csv" : paths.clicks; }
fs::path PipelineConfig::dictionary_path() const {
  return paths.dictionary.empty() ? paths.workdir / "dictionary.bin" : paths.dictionary;
}
fs::path PipelineConfig::features_path() const {
  return paths.features.empty() ? paths.workdir / "features.bin" : paths.features;
}
fs::path PipelineConfig::report_path() const { return paths.report.empty() ? paths.workdir / "report.csv" : paths.report; }
fs::path PipelineConfig::models_dir() const { return paths.models.empty() ? paths.workdir / "models" : paths.models; }
fs::path PipelineConfig::sweep_path() const {
  return paths.sweep.empty() ? paths.workdir / ("sweep_" + to_string(sweep_axis) + ".csv") : paths.sweep;
}

void PipelineConfig::validate(std::size_t n) const {
  synthetic.validate();
  experiment.features.validate(n);
  experiment.regression.train.validate();
  for (double c : experiment.regression.C_grid)
    if (!(c > 0)) throw ConfigError("regress.C: every candidate must be > 0");
  if (folds < 1) throw ConfigError("eval.K must be >= 1");
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("eval.train_fraction must lie in (0, 1)");
}

std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  if (detail::trim(text).empty()) return out;
  for (auto part : detail::split(text, ',')) {
    auto v = detail::parse_double(part);
    if (!v) throw ConfigError(field + ": cannot parse '" + std::string(detail::trim(part)) + "'");
    out.push_back(*v);
  }
  return out;
}

namespace {

struct Entry {
  std::string value;
  std::string where;
};

double to_double(const Entry& e, const std::string& key) {
  auto v = detail::parse_double(e.value);
  if (!v) throw ConfigError(e.where + ": " + key + " expects a number, got '" + e.value + "'");
  return *v;
}

std::size_t to_size(const Entry& e, const std::string& key) {
  auto v = detail::parse_int<std::size_t>(e.value);
  if (!v) throw ConfigError(e.where + ": " + key + " expects a non-negative integer, got '" + e.value + "'");
  return *v;
}

int to_int(const Entry& e, const std::string& key) {
  auto v = detail::parse_int<int>(e.value);
  if (!v) throw ConfigError(e.where + ": " + key + " expects an integer, got '" + e.value + "'");
  return *v;
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
  throw ConfigError(e.where + ": " + key + " expects true/false, got '" + e.value + "'");
}

using Setter = std::function<void(PipelineConfig&, const Entry&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["seed"] = [](auto& c, auto& e, auto& k) {
      auto v = detail::parse_int<std::uint64_t>(e.value);
      if (!v) throw ConfigError(e.where + ": " + k + " expects an unsigned integer");
      c.seed = *v;
    };

    t["paths.workdir"] = [](auto& c, auto& e, auto&) { c.paths.workdir = e.value; };
    t["paths.clicks"] = [](auto& c, auto& e, auto&) { c.paths.clicks = e.value; };
    t["paths.dictionary"] = [](auto& c, auto& e, auto&) { c.paths.dictionary = e.value; };
    t["paths.features"] = [](auto& c, auto& e, auto&) { c.paths.features = e.value; };
    t["paths.report"] = [](auto& c, auto& e, auto&) { c.paths.report = e.value; };
    t["paths.models"] = [](auto& c, auto& e, auto&) { c.paths.models = e.value; };
    t["paths.sweep"] = [](auto& c, auto& e, auto&) { c.paths.sweep = e.value; };

    t["synthetic.count"] = [](auto& c, auto& e, auto& k) { c.synthetic_count = to_size(e, k); };
    t["synthetic.n"] = [](auto& c, auto& e, auto& k) { c.synthetic.n = to_size(e, k); };
    t["synthetic.pulses"] = [](auto& c, auto& e, auto& k) { c.synthetic.pulse_count_base = to_int(e, k); };
    t["synthetic.sample_rate_hz"] = [](auto& c, auto& e, auto& k) { c.synthetic.sample_rate_hz = to_double(e, k); };
    t["synthetic.range_min"] = [](auto& c, auto& e, auto& k) { c.synthetic.range_bounds_m.first = to_double(e, k); };
    t["synthetic.range_max"] = [](auto& c, auto& e, auto& k) { c.synthetic.range_bounds_m.second = to_double(e, k); };
    // Azimuth bounds are read in the unit given by azimuth_unit and converted after parsing.
    t["synthetic.azimuth_min"] = [](auto& c, auto& e, auto& k) { c.synthetic.azimuth_bounds_rad.first = to_double(e, k); };
    t["synthetic.azimuth_max"] = [](auto& c, auto& e, auto& k) { c.synthetic.azimuth_bounds_rad.second = to_double(e, k); };
    t["synthetic.azimuth_unit"] = [](auto&, auto& e, auto& k) {
      if (e.value != "rad" && e.value != "deg") throw ConfigError(e.where + ": " + k + " must be rad or deg");
    };
    t["synthetic.noise_std"] = [](auto& c, auto& e, auto& k) { c.synthetic.noise_std = to_double(e, k); };
    t["synthetic.hydrophones"] = [](auto& c, auto& e, auto& k) { c.synthetic.hydrophone_count = to_int(e, k); };
    t["synthetic.attenuation_length_m"] = [](auto& c, auto& e, auto& k) { c.synthetic.attenuation_length_m = to_double(e, k); };
    t["synthetic.cutoff_ref_hz"] = [](auto& c, auto& e, auto& k) { c.synthetic.cutoff_ref_hz = to_double(e, k); };
    t["synthetic.base_ipi_samples"] = [](auto& c, auto& e, auto& k) { c.synthetic.base_ipi_samples = to_double(e, k); };
    t["synthetic.carrier_hz"] = [](auto& c, auto& e, auto& k) { c.synthetic.carrier_hz = to_double(e, k); };
    t["synthetic.onset_jitter"] = [](auto& c, auto& e, auto& k) { c.synthetic.onset_jitter = to_size(e, k); };

    t["dataset.format"] = [](auto& c, auto& e, auto& k) {
      if (e.value != "auto") parse_click_format(e.value);
      (void)k;
      c.dataset_format = e.value;
    };
    t["dataset.n"] = [](auto& c, auto& e, auto& k) { c.dataset_n = to_size(e, k); };

    t["patch.p"] = [](auto& c, auto& e, auto& k) { c.experiment.features.patch.p = to_size(e, k); };
    t["patch.L"] = [](auto& c, auto& e, auto& k) { c.experiment.features.patch.L = to_size(e, k); };
    t["patch.pca_dims"] = [](auto& c, auto& e, auto& k) {
      c.experiment.features.patch.pca_dims = e.value == "disabled" ? 0 : to_size(e, k);
    };
    t["patch.center"] = [](auto& c, auto& e, auto& k) { c.experiment.features.patch.center = to_bool(e, k); };

    t["dictionary.k"] = [](auto& c, auto& e, auto& k) { c.experiment.features.learner.k = to_size(e, k); };
    t["dictionary.lambda"] = [](auto& c, auto& e, auto& k) { c.experiment.features.learner.lambda = to_double(e, k); };
    t["dictionary.iterations"] = [](auto& c, auto& e, auto& k) { c.experiment.features.learner.iterations = to_int(e, k); };
    t["dictionary.batch_size"] = [](auto& c, auto& e, auto& k) { c.experiment.features.learner.batch_size = to_size(e, k); };
    t["dictionary.samples"] = [](auto& c, auto& e, auto& k) { c.experiment.features.dict_samples = to_size(e, k); };
    t["dictionary.lars_max_steps"] = [](auto& c, auto& e, auto& k) {
      c.experiment.features.learner.lars_max_steps = to_int(e, k);
    };

    t["encoder.method"] = [](auto& c, auto& e, auto&) { c.experiment.features.encoder.method = parse_encoder_method(e.value); };
    t["encoder.lambda"] = [](auto& c, auto& e, auto& k) { c.experiment.features.encoder.lambda = to_double(e, k); };
    t["encoder.beta"] = [](auto& c, auto& e, auto& k) { c.experiment.features.encoder.beta = to_double(e, k); };
    t["encoder.omp_sparsity"] = [](auto& c, auto& e, auto& k) { c.experiment.features.encoder.omp_sparsity = to_size(e, k); };
    t["encoder.lars_max_steps"] = [](auto& c, auto& e, auto& k) { c.experiment.features.encoder.lars_max_steps = to_int(e, k); };
    t["encoder.tol"] = [](auto& c, auto& e, auto& k) { c.experiment.features.encoder.tol = to_double(e, k); };

    t["pooling.mu"] = [](auto& c, auto& e, auto& k) { c.experiment.features.mu = to_double(e, k); };

    t["regress.loss"] = [](auto& c, auto& e, auto&) { c.experiment.regression.train.loss = parse_loss(e.value); };
    t["regress.C"] = [](auto& c, auto& e, auto& k) {
      auto& reg = c.experiment.regression;
      if (e.value == "auto") {
        reg.C_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
        return;
      }
      reg.C_grid = parse_number_list(e.value, k);
      if (reg.C_grid.empty()) throw ConfigError(e.where + ": " + k + " is empty");
      reg.train.C = reg.C_grid.front();
    };
    t["regress.max_iter"] = [](auto& c, auto& e, auto& k) { c.experiment.regression.train.max_iter = to_int(e, k); };
    t["regress.tol"] = [](auto& c, auto& e, auto& k) { c.experiment.regression.train.tol = to_double(e, k); };
    t["regress.normalize_targets"] = [](auto& c, auto& e, auto& k) {
      c.experiment.regression.train.normalize_targets = to_bool(e, k);
    };

    t["eval.K"] = [](auto& c, auto& e, auto& k) { c.folds = to_size(e, k); };
    t["eval.train_fraction"] = [](auto& c, auto& e, auto& k) { c.train_fraction = to_double(e, k); };

    t["sweep.axis"] = [](auto& c, auto& e, auto&) { c.sweep_axis = parse_sweep_axis(e.value); };
    t["sweep.values"] = [](auto& c, auto& e, auto& k) { c.sweep_values = parse_number_list(e.value, k); };
    return t;
  }();
  return table;
}

}  // namespace

PipelineConfig parse_config(std::istream& is, const std::string& source) {
  PipelineConfig cfg;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  bool layers_given = false;
  bool degrees = false;
  std::map<std::string, std::string> seen;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto t = detail::trim(line);
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(detail::trim(t.substr(1, t.size() - 2)));
      static const char* known[] = {"paths", "synthetic", "dataset", "patch", "dictionary", "encoder",
                                    "pyramid", "pooling", "regress", "eval", "sweep"};
      if (std::none_of(std::begin(known), std::end(known), [&](const char* s) { return section == s; }))
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(detail::trim(t.substr(0, eq)));
    const std::string value(detail::trim(t.substr(eq + 1)));
    const std::string full = section.empty() ? key : section + "." + key;
    if (full == "pyramid.layer") {
      if (!layers_given) cfg.experiment.features.pyramid.layers.clear();
      layers_given = true;
      try {
        cfg.experiment.features.pyramid.layers.push_back(parse_pyramid_layer(value));
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
      }
      continue;
    }
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(where + ": unknown key '" + full + "'");
    if (seen.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    seen[full] = value;
    it->second(cfg, Entry{value, where}, full);
    if (full == "synthetic.azimuth_unit") degrees = value == "deg";
  }
  if (degrees) {
    auto& b = cfg.synthetic.azimuth_bounds_rad;
    if (!seen.count("synthetic.azimuth_min")) b.first = -180.0;
    if (!seen.count("synthetic.azimuth_max")) b.second = 180.0;
    b.first *= std::numbers::pi / 180.0;
    b.second *= std::numbers::pi / 180.0;
  }
  // Field-level checks that do not depend on the click length.
  if (cfg.experiment.features.mu == 0.0) throw ConfigError(source + ": pooling.mu must be nonzero");
  if (!(cfg.experiment.features.encoder.lambda > 0)) throw ConfigError(source + ": encoder.lambda must be > 0");
  if (!(cfg.experiment.features.learner.lambda > 0)) throw ConfigError(source + ": dictionary.lambda must be > 0");
  if (cfg.experiment.features.patch.pca_enabled() &&
      cfg.experiment.features.patch.pca_dims > cfg.experiment.features.patch.p)
    throw ConfigError(source + ": patch.pca_dims must be <= patch.p");
  cfg.experiment.features.pyramid.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(is, path.string());
}

}  // namespace clickcode
