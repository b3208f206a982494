#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace clickcode {

/// One detected click: a pre-windowed waveform with its ground-truth position.
struct ClickRecord {
  std::vector<double> samples;  // normalized amplitude, length n
  double range_m = 0.0;         // >= 0
  double azimuth_rad = 0.0;     // in [-pi, pi)
  int hydrophone_id = 0;
  std::int64_t click_id = 0;
};

/// Ordered, immutable collection of clicks sharing one length n.
class ClickDataset {
 public:
  ClickDataset() = default;

  /// Validates the record invariants; throws ShapeError on mixed lengths and
  /// ConfigError on out-of-domain labels. `n` is used only when `clicks` is empty.
  explicit ClickDataset(std::vector<ClickRecord> clicks, std::size_t n = 0);

  const std::vector<ClickRecord>& clicks() const { return clicks_; }
  const ClickRecord& operator[](std::size_t i) const { return clicks_[i]; }
  std::size_t size() const { return clicks_.size(); }
  bool empty() const { return clicks_.empty(); }

  std::size_t n() const { return n_; }
  std::size_t hydrophone_count() const { return per_hydrophone_.size(); }
  /// N^j per hydrophone id, ordered by id.
  const std::map<int, std::size_t>& per_hydrophone_counts() const { return per_hydrophone_; }

  /// Sorted distinct hydrophone ids.
  std::vector<int> hydrophone_ids() const;

  /// Subset in the given index order.
  ClickDataset subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<ClickRecord> clicks_;
  std::size_t n_ = 0;
  std::map<int, std::size_t> per_hydrophone_;
};

enum class ClickFormat { csv, binary, wav_directory };

ClickFormat parse_click_format(const std::string& name);
/// csv for *.csv, binary for *.bin, wav_directory for an existing directory.
ClickFormat infer_click_format(const std::filesystem::path& path);

/// `wav_n` is the target click length for wav_directory input (crop/pad); ignored otherwise.
ClickDataset load_clicks(const std::filesystem::path& path, ClickFormat format, std::size_t wav_n = 2000);

/// Writes csv or binary click files. Doubles are written in shortest round-trip form.
void save_clicks(const ClickDataset& data, const std::filesystem::path& path, ClickFormat format);

/// Mono WAV decoded to [-1, 1] (integer PCM scaled by full range; float PCM copied).
struct WavAudio {
  std::vector<double> samples;
  std::uint32_t sample_rate = 0;
};

WavAudio read_wav(const std::filesystem::path& path);
/// 16-bit PCM mono writer, mainly for fixtures.
void write_wav_pcm16(const std::filesystem::path& path, const std::vector<double>& samples,
                     std::uint32_t sample_rate);

/// Center-crop when longer than n, symmetric zero-pad when shorter (extra pad sample on the right).
std::vector<double> fit_to_length(const std::vector<double>& samples, std::size_t n);

}  // namespace clickcode
