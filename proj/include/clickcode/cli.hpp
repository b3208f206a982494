#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "clickcode/config.hpp"

namespace clickcode {

/// Stage seeds: derive_seed(config.seed, tag) with tags "gen", "train-dict", "splits",
/// "train-eval" and "sweep".
std::uint64_t stage_seed(const PipelineConfig& cfg, const char* tag);

/// Loads clicks using the configured format (inferred from the path when "auto").
ClickDataset load_configured_clicks(const PipelineConfig& cfg, const std::filesystem::path& path);

/// Writes `count` synthetic clicks (format from the extension).
void cmd_gen(const PipelineConfig& cfg, std::size_t count, const std::filesystem::path& out);

/// Learns the dictionary on patches of every click. The PCA basis, when enabled, is
/// written next to it as `<dict_out>.pca`.
void cmd_train_dict(const PipelineConfig& cfg, const std::filesystem::path& clicks_path,
                    const std::filesystem::path& dict_out);

/// Encodes and pools every click; writes the feature cache and its `.ids.csv` sidecar.
void cmd_encode_pool(const PipelineConfig& cfg, const std::filesystem::path& clicks_path,
                     const std::filesystem::path& dict_path, const std::filesystem::path& features_out);

/// Repeated-split evaluation of both targets on a feature cache. Writes the report CSV
/// and `range.ccm` / `azimuth.ccm` fitted on every click into `models_dir`.
void cmd_train_eval(const PipelineConfig& cfg, const std::filesystem::path& features_path,
                    const std::filesystem::path& report_out, const std::filesystem::path& models_dir);

/// Full per-round experiment for each value of the axis. Writes the summary CSV to `out`
/// and the per-round report next to it as `<stem>_report.csv`.
void cmd_sweep(const PipelineConfig& cfg, SweepAxis axis, const std::vector<double>& values,
               const std::filesystem::path& clicks_path, const std::filesystem::path& out);

/// gen (unless the clicks file exists) -> train-dict -> encode -> train-eval, on the configured paths.
void cmd_pipeline(const PipelineConfig& cfg);

/// Command-line front end. Returns the process exit code: 0 success, 1 configuration
/// error, 2 I/O error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace clickcode
