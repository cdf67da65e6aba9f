#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mieze/beamline.hpp"
#include "mieze/synth.hpp"
#include "mieze/wavepacket.hpp"
#include "mieze/witness.hpp"

namespace mieze {

// Either {start, stop, step} (inclusive) or an explicit list.
struct ValueList {
  std::optional<std::array<double, 3>> range;
  std::vector<double> values;

  std::vector<double> expand() const;
  bool operator==(const ValueList&) const = default;
};

// Config values are held in the units of the file keys so that an echoed
// config parses back to an identical object.
struct BeamlineSection {
  double wavelength_nm = 0.55;
  double bandwidth_fraction = 0.002;
  double f1_kHz = 45.0;
  double f2_kHz = 50.0;
  double L1_mm = 85.0;
  std::optional<double> L2_mm;  // defaults to the BL = 0 focusing distance
  double coil_calibration_mT_mm_per_A = 250.0;
  double guide_field_integral_mT_mm = 0.0;
  double polarizer_efficiency = 1.0;
  double contrast = 0.85;
  double mean_level = 0.5;

  // SI config; L2 falls back to focusing_distance when absent.
  BeamlineConfig to_config() const;
  bool operator==(const BeamlineSection&) const = default;
};

struct PacketSection {
  PacketShape shape = PacketShape::gaussian;
  double kappa = 1.0;
  std::size_t samples = 4096;
  double span_delta_k = kDefaultSpanBandwidths;

  WavePacketSpec to_spec(const BeamlineConfig& cfg) const;
  bool operator==(const PacketSection&) const = default;
};

struct ScanSection {
  ValueList currents_A;
  EnergyAxis axis = EnergyAxis::offset;
  ValueList offsets_mm;           // offset axis
  ValueList detunings_rad_per_s;  // detuning axis
  double detuning_time_s = 0.0;
  int channels = kDefaultChannels;
  double counts_scale = 8600.0;
  double background_per_channel = 0.0;
  double global_phase_rad = 0.0;
  std::uint64_t seed = 0;

  ScanPlan to_plan() const;
  bool operator==(const ScanSection&) const = default;
};

struct WitnessSection {
  double alpha1_rad = 0.0;
  double alpha2_rad = kPi / 2.0;
  double gamma1_rad = -kPi / 4.0;
  double gamma2_rad = kPi / 4.0;
  AnalysisPath path = AnalysisPath::single_channel;
  int reference_channel = 5;
  PhaseReference phase_reference = PhaseReference::fitted;
  int bootstrap_resamples = 0;
  std::uint64_t bootstrap_seed = 0;

  AnalysisOptions to_options() const;
  bool operator==(const WitnessSection&) const = default;
};

struct EnvelopeSection {
  ValueList offsets_mm;
  bool operator==(const EnvelopeSection&) const = default;
};

struct RunConfig {
  std::string name;
  BeamlineSection beamline;
  std::optional<PacketSection> packet;
  std::optional<ScanSection> scan;
  WitnessSection witness;
  std::optional<EnvelopeSection> envelope;
  IntensityModel model = IntensityModel::ideal;
  std::string output_dir = ".";

  bool operator==(const RunConfig&) const = default;
};

// Throws ConfigurationError with "<source>:<line>: <message>" for syntax
// errors, unknown keys, missing required fields and invalid values.
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& config);

std::string_view to_string(PacketShape shape);
std::string_view to_string(IntensityModel model);
std::string_view to_string(EnergyAxis axis);
std::string_view to_string(AnalysisPath path);
std::string_view to_string(PhaseReference reference);
IntensityModel parse_model(std::string_view text);

}  // namespace mieze
