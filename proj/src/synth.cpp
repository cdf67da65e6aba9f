#include "mieze/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mieze/errors.hpp"
#include "mieze/random.hpp"

namespace mieze {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigurationError(message);
}

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void ScanPlan::validate() const {
  check(!currents.empty(), "scan plan needs at least one current");
  check(!energy_values.empty(), "scan plan needs at least one offset or detuning");
  check(all_finite(currents) && all_finite(energy_values), "scan coordinates must be finite");
  check(channels >= 4, "need at least 4 time channels per period");
  check(std::isfinite(counts_scale) && counts_scale > 0.0, "counts scale N0 must be positive");
  check(std::isfinite(background) && background >= 0.0, "background must be non-negative");
  check(std::isfinite(global_phase), "global phase must be finite");
  check(axis != EnergyAxis::detuning || (std::isfinite(detuning_time) && detuning_time > 0.0),
        "detuning scans need a positive detuning time");
}

std::vector<ScanPoint> scan_points(const ScanPlan& plan) {
  std::vector<ScanPoint> points;
  points.reserve(plan.size());
  for (double current : plan.currents) {
    for (double value : plan.energy_values) points.push_back({points.size(), current, value});
  }
  return points;
}

double scan_phase(const BeamlineConfig& cfg, EnergyAxis axis, double detuning_time, double current,
                  double energy_value) {
  const double gamma = axis == EnergyAxis::offset ? energy_phase(cfg, DetectorOffset{energy_value})
                                                  : energy_phase_detuning(energy_value, detuning_time);
  return spin_phase(cfg, current) + gamma;
}

double channel_phase(int channel, int channels) {
  return kTwoPi * static_cast<double>(channel) / static_cast<double>(channels);
}

std::vector<double> expected_counts(const BeamlineConfig& cfg, const ScanPlan& plan, const ScanPoint& point,
                                    IntensityModel model, const std::optional<WavePacketSpec>& packet) {
  double contrast = cfg.effective_contrast();
  double phase = 0.0;
  if (model == IntensityModel::ideal) {
    phase = scan_phase(cfg, plan.axis, plan.detuning_time, point.current, point.energy_value);
  } else {
    if (!packet) throw ConfigurationError("wavepacket model needs a packet spec");
    if (plan.axis != EnergyAxis::offset) throw ConfigurationError("wavepacket model supports offset scans only");
    const double guide = larmor_phase(cfg, cfg.guide_field_integral);
    const PacketPipeline p = evolve_packet_pipeline(cfg, *packet, cfg.coil_cal * point.current, guide);
    const MiezeSignal s = beam_signal(p.psi2, p.focus_position + point.energy_value);
    contrast *= s.contrast;
    phase = s.phase;
  }
  const double amplitude = cfg.mean_level * plan.counts_scale;
  std::vector<double> means(static_cast<std::size_t>(plan.channels));
  for (int i = 0; i < plan.channels; ++i) {
    const double x = phase + channel_phase(i, plan.channels) + plan.global_phase;
    means[static_cast<std::size_t>(i)] = plan.background + amplitude * (1.0 + contrast * std::cos(x));
  }
  return means;
}

std::vector<CountsRecord> simulate_scan(const BeamlineConfig& cfg, const ScanPlan& plan, IntensityModel model,
                                        const std::optional<WavePacketSpec>& packet) {
  cfg.validate();
  plan.validate();
  mieze_frequency(cfg);
  if (packet) packet->validate();
  std::vector<CountsRecord> records;
  records.reserve(plan.size());
  for (const ScanPoint& point : scan_points(plan)) {
    const std::vector<double> means = expected_counts(cfg, plan, point, model, packet);
    Philox4x64 rng(plan.seed, point.index);
    CountsRecord r{point.current, point.energy_value, {}};
    r.counts.reserve(means.size());
    for (double m : means) r.counts.push_back(poisson(rng, m));
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<double> normalize(const CountsRecord& record, double counts_scale) {
  if (!std::isfinite(counts_scale) || counts_scale <= 0.0) throw InvalidInput("N0 must be positive");
  std::vector<double> out;
  out.reserve(record.counts.size());
  for (std::uint64_t c : record.counts) out.push_back(static_cast<double>(c) / counts_scale);
  return out;
}

std::vector<double> inclusive_range(double start, double stop, double step) {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    throw InvalidInput("range bounds must be finite");
  }
  if (step == 0.0 || (stop - start) * step < 0.0) throw InvalidInput("range step has the wrong sign or is zero");
  const double span = (stop - start) / step;
  const long n = std::lround(std::floor(span + 1e-9));
  if (n > 10'000'000) throw InvalidInput("range has too many points");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  // Decimal rounding so that -1 + 3 * 0.01 reads back as -0.97.
  const double magnitude = std::max({std::abs(start), std::abs(stop), 1e-300});
  const int decimals = std::min(static_cast<int>(std::ceil(-std::log10(std::abs(step)))) + 12,
                                static_cast<int>(std::floor(15.0 - std::log10(magnitude))));
  const double scale = std::pow(10.0, decimals);
  for (long i = 0; i <= n; ++i) {
    const double v = start + static_cast<double>(i) * step;
    out.push_back(std::round(v * scale) / scale);
  }
  return out;
}

}  // namespace mieze
