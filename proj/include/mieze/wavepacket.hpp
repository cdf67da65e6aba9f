#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mieze/beamline.hpp"
#include "mieze/constants.hpp"

namespace mieze {

enum class PacketShape { gaussian, triangular, rectangular };

// Grid span of +-8 sigma of the gaussian amplitude, in units of delta k.
inline constexpr double kDefaultSpanBandwidths = 8.0 / 0.8325546111576977;  // 8 / sqrt(ln 2)

// Longitudinal wave-packet description. The bandwidth is the FWHM of the
// wavelength (intensity) distribution; delta k = k0 * bandwidth.
struct WavePacketSpec {
  PacketShape shape = PacketShape::gaussian;
  double wavelength = 0.55e-9;  // m
  double bandwidth = 0.002;     // delta lambda / lambda
  double kappa = 1.0;           // intrinsic coherence length / beta_l
  std::size_t samples = 4096;
  double span = kDefaultSpanBandwidths;  // total grid width in units of delta k

  void validate() const;
  double k0() const noexcept { return kTwoPi / wavelength; }
  double delta_k() const noexcept { return k0() * bandwidth; }
  // beta_l = lambda^2 / delta lambda.
  double coherence_length() const noexcept { return wavelength / bandwidth; }
};

// g(k - k0) on a uniform grid with trapezoidal weights; sum w |g|^2 = 1.
struct KDistribution {
  std::vector<double> k;
  std::vector<double> weight;
  std::vector<double> amplitude;
  double step = 0.0;
  double k0 = 0.0;

  std::size_t size() const noexcept { return k.size(); }
  // Standard deviation of |g|^2 about k0.
  double sigma_k() const;
};

KDistribution k_distribution(const WavePacketSpec& spec);

// Packet with the beamline's wavelength and bandwidth.
WavePacketSpec packet_spec(const BeamlineConfig& cfg, PacketShape shape = PacketShape::gaussian,
                           double kappa = 1.0);

enum class Spin { up = 0, down = 1 };

// Phase of one spin branch relative to the free packet:
//   q(k) = k + wavenumber_shift / k, Omega(k) = hbar k^2 / 2m + frequency_shift,
//   static phase = constant_phase + inverse_k_phase / k.
// The static phase is already folded into the branch amplitudes; the law is kept
// so stationary-phase predictions can be made without numerics.
struct BranchPhaseLaw {
  double wavenumber_shift = 0.0;  // 1/m^2
  double frequency_shift = 0.0;   // rad/s
  double inverse_k_phase = 0.0;   // rad/m
  double constant_phase = 0.0;    // rad
};

struct PacketBranch {
  std::vector<Complex> amplitude;
  BranchPhaseLaw law;
};

enum class ElementKind { spin_phase_coil, constant_spin_phase, rf_flipper };

struct AppliedElement {
  ElementKind kind;
  double strength;  // T m (coil), rad (constant phase), rad/s (flipper)
  double position;  // m, flipper only
};

// Immutable two-branch k-space packet. Every operation returns a new state.
class PacketState {
 public:
  // (|up> + |down>) / sqrt(2) times g(k - k0).
  static PacketState prepare(const WavePacketSpec& spec,
                             const PhysicalConstants& constants = kCodata2018);

  const WavePacketSpec& spec() const noexcept { return spec_; }
  const KDistribution& grid() const noexcept { return *grid_; }
  const PhysicalConstants& constants() const noexcept { return constants_; }
  const PacketBranch& branch(Spin s) const noexcept { return branches_[static_cast<int>(s)]; }
  const std::vector<AppliedElement>& history() const noexcept { return history_; }

  // Quadrature-weighted sum over both branches.
  double squared_norm() const;
  // hbar k0 / m.
  double group_velocity() const noexcept;
  double hbar_over_m() const noexcept { return constants_.hbar / constants_.neutron_mass; }

 private:
  PacketState() = default;

  WavePacketSpec spec_;
  std::shared_ptr<const KDistribution> grid_;
  PhysicalConstants constants_ = kCodata2018;
  std::array<PacketBranch, 2> branches_;
  std::vector<AppliedElement> history_;

  friend PacketState apply_spin_phase_k(const PacketState&, double);
  friend PacketState apply_constant_spin_phase(const PacketState&, double);
  friend PacketState apply_rf_flipper(const PacketState&, double, double);
};

// alpha(k) = m gamma_n BL / (hbar k); equals larmor_phase at k0.
double spin_phase_k(double k, double field_integral, const PhysicalConstants& constants = kCodata2018);

// Static coil: up branch gets exp(-i alpha(k)/2), down branch exp(+i alpha(k)/2).
PacketState apply_spin_phase_k(const PacketState& state, double field_integral);

// k-independent relative phase (guide fields): exp(-+i phase/2).
PacketState apply_constant_spin_phase(const PacketState& state, double phase);

// Resonant flipper at z_flipper: swaps the branches; the branch leaving as up
// gains energy hbar omega, the one leaving as down loses it. The spatial
// phase is continuous at the flipper.
PacketState apply_rf_flipper(const PacketState& state, double omega, double z_flipper);

enum class Dispersion {
  exact,      // hbar k^2 / 2m
  co_moving,  // linearized about k0: the envelope travels without spreading
};

// Phase change per grid step allowed before quadrature refuses to evaluate.
inline constexpr double kMaxPhaseStep = kPi / 4.0;

// <z|psi_s(t)> up to the carrier exp(i(k0 z - omega(k0) t)) shared by all
// branches. Throws ResolutionError if the integrand phase advances more than
// kMaxPhaseStep between neighbouring samples.
Complex branch_amplitude(const PacketState& state, Spin spin, double z, double t,
                         Dispersion dispersion = Dispersion::exact);

// |<z|P|psi(t)>|^2. With a spin projection angle theta the analyzer state is
// (|up> + e^{i theta}|down>)/sqrt(2); without one both branches are summed
// incoherently.
double position_intensity(const PacketState& state, double z, double t,
                          std::optional<double> spin_projection,
                          Dispersion dispersion = Dispersion::exact);

// Stationary point of the branch phase at k0: the predicted peak position.
double stationary_peak(const PacketState& state, Spin spin, double t);

struct PeakSearch {
  double z = 0.0;     // argmax on the fine grid
  double cell = 0.0;  // fine grid spacing
};

// Numerical argmax of |<z|psi_s(t)>|^2. A coarse scan over +-window around
// `center` is refined with spacing `cell`.
PeakSearch find_peak(const PacketState& state, Spin spin, double t, double center, double window,
                     double cell, Dispersion dispersion = Dispersion::co_moving);

// Time signal at a fixed position for a stationary beam of mutually incoherent
// copies of the packet, behind an analyzer at `analyzer_angle`:
//   I(t) = mean (1 + contrast cos(frequency t + phase)).
struct MiezeSignal {
  double mean = 0.0;
  double contrast = 0.0;
  double phase = 0.0;
  double frequency = 0.0;

  double operator()(double t) const;
};

MiezeSignal beam_signal(const PacketState& state, double z, double analyzer_angle = 0.0);

// States of the packet along a MIEZE beamline: coil, RF1 at z = 0, RF2 at
// z = L1. The detector reference is the BL = 0 focusing point.
struct PacketPipeline {
  PacketState psi0;
  PacketState psi1;
  PacketState bell;
  PacketState psi2;
  double rf2_position = 0.0;
  double focus_position = 0.0;
};

PacketPipeline evolve_packet_pipeline(const BeamlineConfig& cfg, const WavePacketSpec& spec,
                                      double coil_field_integral, double guide_phase = 0.0);

struct EnvelopePoint {
  double delta = 0.0;  // m
  double contrast = 0.0;
};

std::vector<EnvelopePoint> contrast_envelope(const BeamlineConfig& cfg, const WavePacketSpec& spec,
                                             std::span<const double> deltas);

// Full width at half maximum of an envelope sampled on increasing deltas,
// by linear interpolation. Returns nullopt if it never drops below half.
std::optional<double> envelope_width(std::span<const EnvelopePoint> envelope);

// |phase| / 2pi << kappa lambda / delta lambda, with "<<" read as a factor 10.
struct CoherenceCheck {
  bool satisfied = false;
  double precessions = 0.0;  // N = |phase| / 2 pi
  double limit = 0.0;        // kappa / (10 bandwidth)
  double margin = 0.0;       // limit / N
};

inline constexpr double kCoherenceMarginFactor = 10.0;

CoherenceCheck coherence_check(double phase, const WavePacketSpec& spec);

}  // namespace mieze
