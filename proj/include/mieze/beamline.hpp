#pragma once

#include <array>
#include <string_view>

#include "mieze/constants.hpp"
#include "mieze/quantum_core.hpp"

namespace mieze {

// Beamline parameters in SI units.
struct BeamlineConfig {
  double wavelength = 0.55e-9;            // m
  double bandwidth = 0.002;               // delta lambda / lambda
  double f1 = 45e3;                       // Hz, first rf flipper
  double f2 = 50e3;                       // Hz, second rf flipper
  double L1 = 0.085;                      // m, flipper separation
  double L2 = 0.765;                      // m, second flipper to detector
  double coil_cal = 250e-6;               // T m per A
  double guide_field_integral = 0.0;      // T m, constant residual
  double polarizer_efficiency = 1.0;
  double contrast = 0.85;                 // end-to-end MIEZE contrast
  double mean_level = 0.5;
  PhysicalConstants constants = kCodata2018;

  // Range checks only; the f2 > f1 focusing requirement is enforced where a
  // MIEZE frequency is needed (InfeasibleGeometry).
  void validate() const;

  double omega1() const noexcept { return kTwoPi * f1; }
  double omega2() const noexcept { return kTwoPi * f2; }
  double k0() const noexcept { return kTwoPi / wavelength; }
  // Group velocity h / (m lambda).
  double velocity() const noexcept;
  // Contrast entering the signal model: contrast * polarizer_efficiency.
  double effective_contrast() const noexcept { return contrast * polarizer_efficiency; }
};

// Displacement of the detector from the focusing point, in metres. Negative
// values point away from the analyzer.
struct DetectorOffset {
  double meters = 0.0;
};

// omega_m = 2 (omega2 - omega1). Throws InfeasibleGeometry unless f2 > f1 > 0.
double mieze_frequency(const BeamlineConfig& cfg);

// Larmor phase gamma_n m lambda / h times a field integral (T m).
double larmor_phase(const BeamlineConfig& cfg, double field_integral);

// alpha for a coil current in A, including the constant guide-field integral.
double spin_phase(const BeamlineConfig& cfg, double current);

// gamma = -(m lambda omega_m / h) delta. Assumes the detector sits near the
// focusing point.
double energy_phase(const BeamlineConfig& cfg, DetectorOffset offset);

// gamma = -2 (delta omega) t, for tuning the energy phase by frequency detuning
// at the focusing point.
double energy_phase_detuning(double detuning, double t);

// L2 solving L1/L2 = (w2 - w1)/w1 + gamma_n BL / (2 w1 L2); independent of the
// wavelength. Throws InfeasibleGeometry if the result is not positive.
double focusing_distance(const BeamlineConfig& cfg, double coil_field_integral);

// Two-qubit states along the beamline for spin phase alpha at time t.
struct PipelineTrace {
  SpinEnergyState psi0;  // after the first pi/2 flipper; E0 stored in the E+ slot
  SpinEnergyState psi1;  // after the spin-phase coil
  SpinEnergyState bell;  // after RF1, phase (2 w1 t - alpha)
  SpinEnergyState psi2;  // after RF2, phase (alpha + w_m t)
  SpinEnergyState psi3;  // after pi/2 flipper and analyzer; squared norm 1/2
  // psi0 and psi1 precede the energy split; their energy slot is a marker.
  static constexpr bool kPreSplitBeforeRf1 = true;

  std::array<const SpinEnergyState*, 5> stages() const { return {&psi0, &psi1, &bell, &psi2, &psi3}; }
};

PipelineTrace evolve_pipeline(const BeamlineConfig& cfg, double alpha, double t);

// A (1 + C cos(alpha + gamma + w_m t)) with A = mean_level and
// C = effective_contrast().
double ideal_intensity(const BeamlineConfig& cfg, double alpha, double gamma, double t);

}  // namespace mieze
