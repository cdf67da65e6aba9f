#pragma once

#include <array>
#include <complex>

#include <Eigen/Core>

namespace mieze {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector2c = Eigen::Vector2cd;
using Vector4c = Eigen::Vector4cd;

enum class Subsystem { spin, energy };

// Azimuthal angle of an observable in the x-y plane of one subsystem's Bloch
// sphere.
struct ObservableAngle {
  double angle = 0.0;  // radians
  Subsystem subsystem = Subsystem::spin;

  // Angle reduced to [0, 2pi).
  double canonical() const;
};

// Amplitude slots, spin-major: index = 2 * spin + energy with spin 0 = up and
// energy 0 = E+.
enum class Basis : int { up_plus = 0, up_minus = 1, down_plus = 2, down_minus = 3 };

// Pure state of the spin (x) energy two-qubit system.
//
// Squared norm is kept in [0, 1 + 1e-12]; projections may lower it but nothing
// raises it.
class SpinEnergyState {
 public:
  static constexpr double kNormSlack = 1e-12;

  SpinEnergyState();  // |up E+>
  explicit SpinEnergyState(const Vector4c& amplitudes);
  SpinEnergyState(Complex up_plus, Complex up_minus, Complex down_plus,
                  Complex down_minus);

  // spin (x) energy.
  static SpinEnergyState product(const Vector2c& spin, const Vector2c& energy);

  // (|up E+> + e^{i phase} |down E->) / sqrt(2).
  static SpinEnergyState bell(double phase);

  const Vector4c& amplitudes() const noexcept { return amps_; }
  Complex amplitude(Basis b) const noexcept { return amps_[static_cast<int>(b)]; }

  double squared_norm() const noexcept { return amps_.squaredNorm(); }
  bool is_normalized(double tol = 1e-9) const noexcept;

  // Throws NormalizationError for the zero vector.
  SpinEnergyState normalized() const;

  // U |psi>. The caller is responsible for U being unitary or a contraction.
  SpinEnergyState apply(const Matrix4c& op) const;
  SpinEnergyState apply_spin(const Matrix2c& op) const;
  SpinEnergyState apply_energy(const Matrix2c& op) const;

  // Equality modulo a global phase.
  bool equivalent(const SpinEnergyState& other, double tol = 1e-9) const;

  // tr(rho_s^2) of the renormalized state; 1/2 for maximal entanglement.
  double spin_purity() const;

 private:
  Vector4c amps_;
};

// cos(angle) sigma_x + sin(angle) sigma_y.
Matrix2c observable(const ObservableAngle& angle);
Matrix2c observable(double angle);

// |theta><theta| with |theta> = (|0> + e^{i angle} |1>) / sqrt(2).
Matrix2c projector(const ObservableAngle& angle);
Matrix2c projector(double angle);

// <psi| sigma_s(alpha) (x) sigma_e(gamma) |psi>, clamped to [-1, 1].
double joint_expectation(const SpinEnergyState& state, double alpha, double gamma);

struct WitnessSettings {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;

  void validate() const;
  // Same settings with every angle moved by `offset` (spin) / `energy_offset`.
  WitnessSettings shifted(double spin_offset, double energy_offset = 0.0) const;
};

// Sign of each term in S = E11 + E12 + E21 - E22, indexed [i][j].
inline constexpr std::array<std::array<double, 2>, 2> kChshSigns{{{1.0, 1.0}, {1.0, -1.0}}};

double chsh_value(const SpinEnergyState& state, const WitnessSettings& settings);

// alpha1 = 0, gamma1 = -pi/4, alpha2 = pi/2, gamma2 = pi/4.
WitnessSettings optimal_settings();

// Counts N(alpha + k pi, gamma + l pi), indexed [k][l].
using CountQuad = std::array<std::array<double, 2>, 2>;

// sum (-1)^{k+l} N_kl / sum N_kl. Throws DegenerateData if every count is 0.
double expectation_from_counts(const CountQuad& counts);

}  // namespace mieze
