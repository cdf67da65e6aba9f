#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mieze/beamline.hpp"
#include "mieze/wavepacket.hpp"

namespace mieze {

// How the energy phase gamma is set at each scan point.
enum class EnergyAxis {
  offset,    // detector displacement delta (m) from the focusing point
  detuning,  // rf frequency detuning delta omega (rad/s) at the focus
};

enum class IntensityModel { ideal, wavepacket };

inline constexpr int kDefaultChannels = 16;

struct ScanPlan {
  std::vector<double> currents;        // A
  std::vector<double> energy_values;   // m or rad/s, per axis
  EnergyAxis axis = EnergyAxis::offset;
  double detuning_time = 0.0;          // s, t in gamma = -2 (delta omega) t
  int channels = kDefaultChannels;     // time channels per MIEZE period
  double counts_scale = 8600.0;        // N0: expected max + min counts
  double background = 0.0;             // counts per channel
  double global_phase = 0.0;           // rad, arbitrary time-channel origin
  std::uint64_t seed = 0;

  // Throws ConfigurationError.
  void validate() const;
  std::size_t size() const noexcept { return currents.size() * energy_values.size(); }
};

// Current-major ordering: index = i_current * n_energy + i_energy.
struct ScanPoint {
  std::size_t index = 0;
  double current = 0.0;
  double energy_value = 0.0;
};

std::vector<ScanPoint> scan_points(const ScanPlan& plan);

struct CountsRecord {
  double current = 0.0;       // A
  double energy_value = 0.0;  // m or rad/s
  std::vector<std::uint64_t> counts;  // one per time channel
};

// alpha + gamma at a scan coordinate.
double scan_phase(const BeamlineConfig& cfg, EnergyAxis axis, double detuning_time, double current,
                  double energy_value);

// Channel phase omega_m t_i = 2 pi i / n.
double channel_phase(int channel, int channels);

// Model means for every channel of one point. The wavepacket model needs a
// packet spec and an offset axis.
std::vector<double> expected_counts(const BeamlineConfig& cfg, const ScanPlan& plan, const ScanPoint& point,
                                    IntensityModel model,
                                    const std::optional<WavePacketSpec>& packet = std::nullopt);

// Poisson counts drawn from stream (seed, point index).
std::vector<CountsRecord> simulate_scan(const BeamlineConfig& cfg, const ScanPlan& plan, IntensityModel model,
                                        const std::optional<WavePacketSpec>& packet = std::nullopt);

// counts / N0. Throws InvalidInput unless N0 > 0.
std::vector<double> normalize(const CountsRecord& record, double counts_scale);

// start, start + step, ... up to stop inclusive, each value rounded to 12
// decimals below the step's magnitude. Throws InvalidInput for a zero or wrong-signed step.
std::vector<double> inclusive_range(double start, double stop, double step);

}  // namespace mieze
