#include "clickcode/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "clickcode/error.hpp"
#include "clickcode/random.hpp"
#include "text_util.hpp"

namespace clickcode {

namespace fs = std::filesystem;

namespace {

std::ostream* g_log = &std::cerr;

void log_line(const std::string& msg) { *g_log << "[clickcode] " << msg << '\n'; }

void ensure_parent(const fs::path& p) {
  const auto parent = p.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

ClickFormat output_format(const fs::path& out) {
  const auto ext = out.extension().string();
  if (ext == ".csv") return ClickFormat::csv;
  if (ext == ".bin") return ClickFormat::binary;
  throw ConfigError("click output '" + out.string() + "' must end in .csv or .bin");
}

fs::path pca_path(const fs::path& dict) { return fs::path(dict.string() + ".pca"); }

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

SplitPlan plan_for(const PipelineConfig& cfg, std::span<const int> hydrophones) {
  return make_splits(hydrophones.size(), cfg.folds, cfg.train_fraction, stage_seed(cfg, "splits"), hydrophones);
}

fs::path pick(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

std::vector<int> hydrophones_of(const ClickDataset& data) {
  std::vector<int> h;
  h.reserve(data.size());
  for (const auto& c : data.clicks()) h.push_back(c.hydrophone_id);
  return h;
}

}  // namespace

std::uint64_t stage_seed(const PipelineConfig& cfg, const char* tag) { return derive_seed(cfg.seed, tag); }

ClickDataset load_configured_clicks(const PipelineConfig& cfg, const fs::path& path) {
  const ClickFormat fmt =
      cfg.dataset_format == "auto" ? infer_click_format(path) : parse_click_format(cfg.dataset_format);
  return load_clicks(path, fmt, cfg.dataset_n);
}

void cmd_gen(const PipelineConfig& cfg, std::size_t count, const fs::path& out) {
  SyntheticConfig syn = cfg.synthetic;
  syn.rng_seed = stage_seed(cfg, "gen");
  const ClickFormat fmt = output_format(out);
  const ClickDataset data = generate_synthetic(syn, count);
  ensure_parent(out);
  save_clicks(data, out, fmt);
  log_line("gen: wrote " + std::to_string(count) + " clicks to " + out.string());
}

void cmd_train_dict(const PipelineConfig& cfg, const fs::path& clicks_path, const fs::path& dict_out) {
  const ClickDataset data = load_configured_clicks(cfg, clicks_path);
  if (data.empty()) throw ConfigError("train-dict: no clicks in '" + clicks_path.string() + "'");
  cfg.validate(data.n());
  const auto idx = all_indices(data.size());
  const CodingModel model = learn_coding_model(data, idx, cfg.experiment.features, stage_seed(cfg, "train-dict"));
  ensure_parent(dict_out);
  save_dictionary(model.dictionary, dict_out);
  const fs::path pca_file = pca_path(dict_out);
  if (model.pca) {
    save_pca(*model.pca, pca_file);
  } else if (fs::exists(pca_file)) {
    fs::remove(pca_file);
  }
  log_line("train-dict: k=" + std::to_string(model.dictionary.size()) + " p'=" + std::to_string(model.dictionary.dim()) +
           " -> " + dict_out.string());
}

void cmd_encode_pool(const PipelineConfig& cfg, const fs::path& clicks_path, const fs::path& dict_path,
                     const fs::path& features_out) {
  const ClickDataset data = load_configured_clicks(cfg, clicks_path);
  cfg.validate(data.n());
  const auto& fc = cfg.experiment.features;
  CodingModel model{load_dictionary(dict_path), std::nullopt, {}};
  if (fc.patch.pca_enabled()) {
    const fs::path pca_file = pca_path(dict_path);
    if (!fs::exists(pca_file)) throw IoError("encode: PCA basis '" + pca_file.string() + "' not found");
    model.pca = load_pca(pca_file);
  }
  if (model.dictionary.dim() != fc.patch.output_dim())
    throw ConfigError("encode: dictionary atoms have dimension " + std::to_string(model.dictionary.dim()) +
                      " but patch settings give " + std::to_string(fc.patch.output_dim()));
  const FeatureSet set = encode_feature_set(data, model, fc);
  ensure_parent(features_out);
  save_features(set, features_out);
  save_feature_index(set, feature_index_path(features_out));
  log_line("encode: " + std::to_string(set.size()) + " x " + std::to_string(set.dim()) + " -> " +
           features_out.string());
}

void cmd_train_eval(const PipelineConfig& cfg, const fs::path& features_path, const fs::path& report_out,
                    const fs::path& models_dir) {
  cfg.validate(cfg.experiment.features.patch.p);
  FeatureSet set = load_features(features_path);
  const fs::path index = feature_index_path(features_path);
  if (fs::exists(index)) {
    load_feature_index(set, index);
  } else {
    log_line("train-eval: no " + index.string() + ", treating all clicks as one hydrophone");
    set.hydrophone_ids.assign(set.size(), 0);
  }
  if (set.size() < 2) throw ConfigError("train-eval: need at least two clicks");
  const SplitPlan splits = plan_for(cfg, set.hydrophone_ids);
  const std::uint64_t seed = stage_seed(cfg, "train-eval");
  const FeatureEvaluation eval =
      evaluate_features(set.features, set.labels, set.hydrophone_ids, splits, cfg.experiment.regression, seed);

  const std::pair<std::string, const FeatureEvaluation*> entries[] = {
      {detail::format_double(cfg.experiment.features.mu), &eval}};
  ensure_parent(report_out);
  write_report_csv(report_out, entries, cfg.seed);

  std::error_code ec;
  fs::create_directories(models_dir, ec);
  if (ec) throw IoError("cannot create directory '" + models_dir.string() + "': " + ec.message());
  Eigen::VectorXd range(set.size()), azimuth(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    range[static_cast<Eigen::Index>(i)] = set.labels[i].range_m;
    azimuth[static_cast<Eigen::Index>(i)] = set.labels[i].azimuth_rad;
  }
  save_model(fit_target(set.features, range, cfg.experiment.regression, Target::range, derive_seed(seed, "final/range")),
             models_dir / "range.ccm");
  save_model(fit_target(set.features, azimuth, cfg.experiment.regression, Target::azimuth,
                        derive_seed(seed, "final/azimuth")),
             models_dir / "azimuth.ccm");
  log_line("train-eval: range ARMSE " + detail::format_double(eval.range.normalized.global) + " (baseline " +
           detail::format_double(eval.range.baseline_normalized.global) + "), azimuth ARMSE " +
           detail::format_double(eval.azimuth.normalized.global) + " (baseline " +
           detail::format_double(eval.azimuth.baseline_normalized.global) + ") -> " + report_out.string());
}

void cmd_sweep(const PipelineConfig& cfg, SweepAxis axis, const std::vector<double>& values,
               const fs::path& clicks_path, const fs::path& out) {
  if (values.empty()) throw ConfigError("sweep.values is empty");
  for (double v : values) {
    if (axis == SweepAxis::mu && v == 0.0) throw ConfigError("sweep.values: mu must be nonzero");
    if (axis == SweepAxis::k && !(v >= 1 && v == std::floor(v)))
      throw ConfigError("sweep.values: k must be a positive integer");
  }
  const ClickDataset data = load_configured_clicks(cfg, clicks_path);
  cfg.validate(data.n());
  ExperimentConfig exp = cfg.experiment;
  exp.seed = stage_seed(cfg, "sweep");
  const auto hydro = hydrophones_of(data);
  const SplitPlan splits = plan_for(cfg, hydro);
  const auto rows = sweep(data, exp, axis, values, splits);

  ensure_parent(out);
  write_sweep_csv(out, axis, rows);
  std::vector<std::pair<std::string, const FeatureEvaluation*>> entries;
  for (const auto& r : rows) entries.emplace_back(detail::format_double(r.value), &r.result.evaluation);
  const fs::path report = out.parent_path() / (out.stem().string() + "_report.csv");
  write_report_csv(report, entries, cfg.seed);
  log_line("sweep: " + std::to_string(rows.size()) + " values of " + to_string(axis) + " -> " + out.string());
}

void cmd_pipeline(const PipelineConfig& cfg) {
  const fs::path clicks = cfg.clicks_path();
  if (cfg.paths.clicks.empty()) cmd_gen(cfg, cfg.synthetic_count, clicks);
  cmd_train_dict(cfg, clicks, cfg.dictionary_path());
  cmd_encode_pool(cfg, clicks, cfg.dictionary_path(), cfg.features_path());
  cmd_train_eval(cfg, cfg.features_path(), cfg.report_path(), cfg.models_dir());
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  g_log = &err;
  CLI::App app{"Sparse-coded click features and range/azimuth regression"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "Sectioned key = value config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Root seed; overrides the config value");
  app.add_option("--threads", threads, "Worker threads, 0 = OpenMP default")->check(CLI::NonNegativeNumber);

  std::size_t gen_count = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate synthetic clicks");
  auto* gen_count_opt = gen->add_option("--count", gen_count, "Number of clicks (default synthetic.count)");
  gen->add_option("--out", gen_out, "Output .csv or .bin (default paths.clicks)");

  std::string td_clicks, td_out;
  auto* td = app.add_subcommand("train-dict", "Learn the dictionary (and PCA basis) from clicks");
  td->add_option("--clicks", td_clicks, "Click file or WAV directory (default paths.clicks)");
  td->add_option("--out", td_out, "Dictionary output (default paths.dictionary)");

  std::string enc_clicks, enc_dict, enc_out;
  auto* enc = app.add_subcommand("encode", "Encode and pool clicks into a feature cache");
  enc->add_option("--clicks", enc_clicks, "Click file or WAV directory (default paths.clicks)");
  enc->add_option("--dict", enc_dict, "Dictionary file (default paths.dictionary)");
  enc->add_option("--out", enc_out, "Feature cache output (default paths.features)");

  std::string te_features, te_report, te_models;
  auto* te = app.add_subcommand("train-eval", "Repeated-split regression of range and azimuth");
  te->add_option("--features", te_features, "Feature cache (default paths.features)");
  te->add_option("--report", te_report, "Report CSV (default paths.report)");
  te->add_option("--models", te_models, "Model output directory (default paths.models)");

  std::string sw_axis, sw_values, sw_clicks, sw_out;
  auto* sw = app.add_subcommand("sweep", "Run the full experiment for several values of mu or k");
  sw->add_option("--axis", sw_axis, "mu or k (default sweep.axis)");
  sw->add_option("--values", sw_values, "Comma-separated values (default sweep.values)");
  sw->add_option("--clicks", sw_clicks, "Click file or WAV directory (default paths.clicks)");
  sw->add_option("--out", sw_out, "Summary CSV (default paths.sweep)");

  std::string pl_workdir;
  auto* pl = app.add_subcommand("pipeline", "gen, train-dict, encode and train-eval in sequence");
  pl->add_option("--workdir", pl_workdir, "Output directory (default paths.workdir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (*seed_opt) cfg.seed = seed;
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    const auto start = std::chrono::steady_clock::now();
    if (gen->parsed()) {
      cmd_gen(cfg, *gen_count_opt ? gen_count : cfg.synthetic_count, pick(gen_out, cfg.clicks_path()));
    } else if (td->parsed()) {
      cmd_train_dict(cfg, pick(td_clicks, cfg.clicks_path()),
                     pick(td_out, cfg.dictionary_path()));
    } else if (enc->parsed()) {
      cmd_encode_pool(cfg, pick(enc_clicks, cfg.clicks_path()),
                      pick(enc_dict, cfg.dictionary_path()),
                      pick(enc_out, cfg.features_path()));
    } else if (te->parsed()) {
      cmd_train_eval(cfg, pick(te_features, cfg.features_path()),
                     pick(te_report, cfg.report_path()),
                     pick(te_models, cfg.models_dir()));
    } else if (sw->parsed()) {
      if (!sw_axis.empty()) cfg.sweep_axis = parse_sweep_axis(sw_axis);
      if (!sw_values.empty()) cfg.sweep_values = parse_number_list(sw_values, "--values");
      cmd_sweep(cfg, cfg.sweep_axis, cfg.sweep_values, pick(sw_clicks, cfg.clicks_path()),
                pick(sw_out, cfg.sweep_path()));
    } else if (pl->parsed()) {
      if (!pl_workdir.empty()) cfg.paths.workdir = pl_workdir;
      cmd_pipeline(cfg);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_line("done in " + detail::format_double(std::round(secs * 100) / 100) + " s");
    return 0;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace clickcode
