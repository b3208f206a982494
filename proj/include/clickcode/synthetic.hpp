#pragma once

#include <cstdint>
#include <numbers>
#include <utility>

#include "clickcode/dataset.hpp"

namespace clickcode {

/// Generator settings for multi-pulse synthetic clicks. Range is encoded in the
/// pulse amplitude and the low-pass bandwidth, azimuth in the inter-pulse interval.
struct SyntheticConfig {
  std::size_t n = 2000;
  int pulse_count_base = 4;
  double sample_rate_hz = 48000.0;
  std::pair<double, double> range_bounds_m{200.0, 4000.0};
  std::pair<double, double> azimuth_bounds_rad{-std::numbers::pi, std::numbers::pi};
  double noise_std = 0.01;
  std::uint64_t rng_seed = 1;
  int hydrophone_count = 5;

  // Waveform model constants.
  double attenuation_length_m = 3000.0;  // amplitude = exp(-range / attenuation_length)
  double cutoff_ref_hz = 12000.0;        // cutoff = cutoff_ref * range_ref / range
  double range_ref_m = 1000.0;
  double base_ipi_samples = 60.0;        // ipi = base * (1 + 0.5 * azimuth / pi)
  double carrier_hz = 9000.0;
  double burst_decay_samples = 6.0;
  double pulse_ratio = 0.6;              // each successive pulse scaled by this
  double onset_fraction = 0.25;          // first pulse at onset_fraction * n
  std::size_t onset_jitter = 20;         // uniform integer jitter in [-j, j]

  /// Throws ConfigError when a bound or parameter is out of domain.
  void validate() const;
};

/// Deterministic waveform parameters derived from the labels of one click.
struct PulseTrainParams {
  double amplitude;      // leading pulse amplitude
  double cutoff_hz;      // single-pole low-pass cutoff
  double lowpass_coeff;  // y += coeff * (x - y)
  double ipi_samples;    // inter-pulse interval
};

PulseTrainParams pulse_train_params(const SyntheticConfig& cfg, double range_m, double azimuth_rad);

/// Noise-free waveform for the given labels and onset sample.
std::vector<double> synthesize_click(const SyntheticConfig& cfg, double range_m, double azimuth_rad,
                                     std::size_t onset);

/// Pure function of (cfg, count). Labels are drawn uniformly within the bounds,
/// hydrophones assigned round-robin, click ids 0..count-1.
ClickDataset generate_synthetic(const SyntheticConfig& cfg, std::size_t count);

}  // namespace clickcode
