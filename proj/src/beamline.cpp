#include "mieze/beamline.hpp"

#include <cmath>
#include <string>

#include "mieze/errors.hpp"

namespace mieze {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigurationError(message);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void BeamlineConfig::validate() const {
  check(finite(wavelength) && wavelength > 0.0, "wavelength must be positive");
  check(finite(bandwidth) && bandwidth > 0.0 && bandwidth < 1.0, "bandwidth must lie in (0, 1)");
  check(finite(f1) && f1 > 0.0, "f1 must be positive");
  check(finite(f2) && f2 > 0.0, "f2 must be positive");
  check(finite(L1) && L1 > 0.0, "L1 must be positive");
  check(finite(L2) && L2 > 0.0, "L2 must be positive");
  check(finite(coil_cal), "coil calibration must be finite");
  check(finite(guide_field_integral), "guide field integral must be finite");
  check(finite(polarizer_efficiency) && polarizer_efficiency >= 0.0 && polarizer_efficiency <= 1.0,
        "polarizer efficiency must lie in [0, 1]");
  check(finite(contrast) && contrast >= 0.0 && contrast <= 1.0, "contrast must lie in [0, 1]");
  check(finite(mean_level) && mean_level > 0.0, "mean level must be positive");
  check(constants.neutron_mass > 0.0 && constants.planck > 0.0 && constants.hbar > 0.0 &&
            constants.gyromagnetic > 0.0,
        "physical constants must be positive");
}

double BeamlineConfig::velocity() const noexcept {
  return constants.planck / (constants.neutron_mass * wavelength);
}

double mieze_frequency(const BeamlineConfig& cfg) {
  if (!(cfg.f1 > 0.0) || !(cfg.f2 > cfg.f1)) {
    throw InfeasibleGeometry("MIEZE geometry requires f2 > f1 > 0 (f1 = " + std::to_string(cfg.f1) +
                             " Hz, f2 = " + std::to_string(cfg.f2) + " Hz)");
  }
  return 2.0 * (cfg.omega2() - cfg.omega1());
}

double larmor_phase(const BeamlineConfig& cfg, double field_integral) {
  const auto& c = cfg.constants;
  return c.gyromagnetic * c.neutron_mass * cfg.wavelength / c.planck * field_integral;
}

double spin_phase(const BeamlineConfig& cfg, double current) {
  if (!std::isfinite(cfg.coil_cal) || !std::isfinite(current)) {
    throw InvalidInput("coil calibration and current must be finite");
  }
  return larmor_phase(cfg, cfg.coil_cal * current + cfg.guide_field_integral);
}

double energy_phase(const BeamlineConfig& cfg, DetectorOffset offset) {
  const auto& c = cfg.constants;
  return -(c.neutron_mass * cfg.wavelength * mieze_frequency(cfg) / c.planck) * offset.meters;
}

double energy_phase_detuning(double detuning, double t) { return -2.0 * detuning * t; }

double focusing_distance(const BeamlineConfig& cfg, double coil_field_integral) {
  const double w1 = cfg.omega1();
  const double w2 = cfg.omega2();
  if (!(w1 > 0.0) || !(w2 > w1)) {
    throw InfeasibleGeometry("focusing requires f2 > f1 > 0");
  }
  if (!(cfg.L1 > 0.0)) throw ConfigurationError("L1 must be positive");
  const double l2 =
      (w1 * cfg.L1 - 0.5 * cfg.constants.gyromagnetic * coil_field_integral) / (w2 - w1);
  if (!(l2 > 0.0) || !std::isfinite(l2)) {
    throw InfeasibleGeometry("focusing distance " + std::to_string(l2) + " m is not positive");
  }
  return l2;
}

PipelineTrace evolve_pipeline(const BeamlineConfig& cfg, double alpha, double t) {
  if (!std::isfinite(alpha)) throw InvalidInput("alpha must be finite");
  if (!std::isfinite(t) || t < 0.0) throw InvalidInput("t must be finite and non-negative");

  const double h = 1.0 / kSqrt2;
  const double wm = mieze_frequency(cfg);
  const Complex zero = 0.0;

  PipelineTrace trace{
      SpinEnergyState(h, zero, h, zero),
      SpinEnergyState(h, zero, std::polar(h, alpha), zero),
      SpinEnergyState::bell(2.0 * cfg.omega1() * t - alpha),
      SpinEnergyState::bell(alpha + wm * t),
      SpinEnergyState(),
  };

  // Final pi/2 flipper + analyzer: project the spin on P(0), then relabel the
  // transmitted spinor as |up>.
  const SpinEnergyState projected = trace.psi2.apply_spin(projector(0.0));
  const Vector4c& p = projected.amplitudes();
  const Complex plus = p[0] * kSqrt2;   // <+| component, energy E+
  const Complex minus = p[1] * kSqrt2;  // energy E-
  trace.psi3 = SpinEnergyState(plus, minus, zero, zero);
  return trace;
}

double ideal_intensity(const BeamlineConfig& cfg, double alpha, double gamma, double t) {
  if (cfg.contrast < 0.0 || cfg.contrast > 1.0) throw InvalidInput("contrast must lie in [0, 1]");
  return cfg.mean_level *
         (1.0 + cfg.effective_contrast() * std::cos(alpha + gamma + mieze_frequency(cfg) * t));
}

}  // namespace mieze
