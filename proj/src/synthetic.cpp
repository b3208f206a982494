#include "clickcode/synthetic.hpp"

#include <cmath>
#include <random>

#include "clickcode/error.hpp"
#include "clickcode/random.hpp"

namespace clickcode {

void SyntheticConfig::validate() const {
  if (n == 0) throw ConfigError("synthetic.n must be >= 1");
  if (pulse_count_base < 1) throw ConfigError("synthetic.pulse_count_base must be >= 1");
  if (!(sample_rate_hz > 0)) throw ConfigError("synthetic.sample_rate_hz must be > 0");
  if (!(range_bounds_m.first >= 0)) throw ConfigError("synthetic.range_min must be >= 0");
  if (!(range_bounds_m.first < range_bounds_m.second)) throw ConfigError("synthetic.range_min must be < range_max");
  if (!(azimuth_bounds_rad.first < azimuth_bounds_rad.second))
    throw ConfigError("synthetic.azimuth_min must be < azimuth_max");
  if (azimuth_bounds_rad.first < -std::numbers::pi || azimuth_bounds_rad.second > std::numbers::pi)
    throw ConfigError("synthetic azimuth bounds must lie within [-pi, pi]");
  if (!(noise_std >= 0)) throw ConfigError("synthetic.noise_std must be >= 0");
  if (hydrophone_count < 1) throw ConfigError("synthetic.hydrophones must be >= 1");
  if (!(attenuation_length_m > 0) || !(cutoff_ref_hz > 0) || !(range_ref_m > 0) || !(base_ipi_samples > 0) ||
      !(burst_decay_samples > 0) || !(pulse_ratio > 0))
    throw ConfigError("synthetic waveform constants must be positive");
}

PulseTrainParams pulse_train_params(const SyntheticConfig& cfg, double range_m, double azimuth_rad) {
  PulseTrainParams p{};
  p.amplitude = std::exp(-range_m / cfg.attenuation_length_m);
  // Floor the range so the cutoff stays finite at range 0.
  p.cutoff_hz = cfg.cutoff_ref_hz * cfg.range_ref_m / std::max(range_m, 1.0);
  p.lowpass_coeff = 1.0 - std::exp(-2.0 * std::numbers::pi * p.cutoff_hz / cfg.sample_rate_hz);
  p.ipi_samples = cfg.base_ipi_samples * (1.0 + 0.5 * azimuth_rad / std::numbers::pi);
  return p;
}

std::vector<double> synthesize_click(const SyntheticConfig& cfg, double range_m, double azimuth_rad,
                                     std::size_t onset) {
  const auto params = pulse_train_params(cfg, range_m, azimuth_rad);
  std::vector<double> x(cfg.n, 0.0);
  const double omega = 2.0 * std::numbers::pi * cfg.carrier_hz / cfg.sample_rate_hz;
  double pulse_amp = params.amplitude;
  for (int m = 0; m < cfg.pulse_count_base; ++m, pulse_amp *= cfg.pulse_ratio) {
    const double t0 = static_cast<double>(onset) + m * params.ipi_samples;
    const auto first = static_cast<std::size_t>(std::ceil(t0));
    // Bursts are negligible after ~12 decay lengths.
    const auto last = std::min(cfg.n, first + static_cast<std::size_t>(12.0 * cfg.burst_decay_samples) + 1);
    for (std::size_t t = first; t < last; ++t) {
      const double dt = static_cast<double>(t) - t0;
      x[t] += pulse_amp * std::sin(omega * dt) * std::exp(-dt / cfg.burst_decay_samples);
    }
  }
  double y = 0.0;
  for (auto& v : x) {
    y += params.lowpass_coeff * (v - y);
    v = y;
  }
  return x;
}

ClickDataset generate_synthetic(const SyntheticConfig& cfg, std::size_t count) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  std::uniform_real_distribution<double> range_dist(cfg.range_bounds_m.first, cfg.range_bounds_m.second);
  std::uniform_real_distribution<double> az_dist(cfg.azimuth_bounds_rad.first, cfg.azimuth_bounds_rad.second);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto jitter = static_cast<long>(cfg.onset_jitter);
  std::uniform_int_distribution<long> jitter_dist(-jitter, jitter);
  const auto base_onset = static_cast<long>(cfg.onset_fraction * static_cast<double>(cfg.n));

  std::vector<ClickRecord> clicks;
  clicks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ClickRecord c;
    c.click_id = static_cast<std::int64_t>(i);
    c.hydrophone_id = static_cast<int>(i % static_cast<std::size_t>(cfg.hydrophone_count));
    c.range_m = range_dist(rng);
    double az = az_dist(rng);
    if (az >= std::numbers::pi) az = std::nextafter(std::numbers::pi, 0.0);
    c.azimuth_rad = az;
    const long onset = std::clamp(base_onset + jitter_dist(rng), 0L, static_cast<long>(cfg.n) - 1);
    c.samples = synthesize_click(cfg, c.range_m, c.azimuth_rad, static_cast<std::size_t>(onset));
    if (cfg.noise_std > 0)
      for (auto& s : c.samples) s += cfg.noise_std * noise(rng);
    clicks.push_back(std::move(c));
  }
  return ClickDataset(std::move(clicks), cfg.n);
}

}  // namespace clickcode
