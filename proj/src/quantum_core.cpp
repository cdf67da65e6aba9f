#include "mieze/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mieze/constants.hpp"
#include "mieze/errors.hpp"

namespace mieze {

namespace {

constexpr double kImaginaryResidueTol = 1e-12;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw InvalidInput(std::string(what) + " must be finite");
  }
}

void require_normalized(const SpinEnergyState& state) {
  if (!state.is_normalized()) {
    throw NormalizationError("state squared norm " + std::to_string(state.squared_norm()) +
                             " is not 1");
  }
}

}  // namespace

double ObservableAngle::canonical() const {
  require_finite(angle, "observable angle");
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

SpinEnergyState::SpinEnergyState() : amps_(Vector4c::Zero()) { amps_[0] = 1.0; }

SpinEnergyState::SpinEnergyState(const Vector4c& amplitudes) : amps_(amplitudes) {
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(amps_[i].real()) || !std::isfinite(amps_[i].imag())) {
      throw InvalidInput("state amplitudes must be finite");
    }
  }
  if (amps_.squaredNorm() > 1.0 + kNormSlack) {
    throw NormalizationError("state squared norm exceeds 1");
  }
}

SpinEnergyState::SpinEnergyState(Complex up_plus, Complex up_minus, Complex down_plus,
                                 Complex down_minus)
    : SpinEnergyState(Vector4c(up_plus, up_minus, down_plus, down_minus)) {}

SpinEnergyState SpinEnergyState::product(const Vector2c& spin, const Vector2c& energy) {
  Vector4c v;
  v << spin[0] * energy[0], spin[0] * energy[1], spin[1] * energy[0], spin[1] * energy[1];
  return SpinEnergyState(v);
}

SpinEnergyState SpinEnergyState::bell(double phase) {
  require_finite(phase, "Bell phase");
  const double h = 1.0 / kSqrt2;
  return SpinEnergyState(h, 0.0, 0.0, h * std::polar(1.0, phase));
}

bool SpinEnergyState::is_normalized(double tol) const noexcept {
  return std::abs(squared_norm() - 1.0) <= tol;
}

SpinEnergyState SpinEnergyState::normalized() const {
  const double n = amps_.norm();
  if (n == 0.0) throw NormalizationError("cannot normalize the zero state");
  return SpinEnergyState(Vector4c(amps_ / n));
}

SpinEnergyState SpinEnergyState::apply(const Matrix4c& op) const {
  return SpinEnergyState(Vector4c(op * amps_));
}

SpinEnergyState SpinEnergyState::apply_spin(const Matrix2c& op) const {
  Matrix4c full = Matrix4c::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) full.block<2, 2>(2 * a, 2 * b) = op(a, b) * Matrix2c::Identity();
  return apply(full);
}

SpinEnergyState SpinEnergyState::apply_energy(const Matrix2c& op) const {
  Matrix4c full = Matrix4c::Zero();
  full.block<2, 2>(0, 0) = op;
  full.block<2, 2>(2, 2) = op;
  return apply(full);
}

bool SpinEnergyState::equivalent(const SpinEnergyState& other, double tol) const {
  // |<a|b>| = |a||b| iff b is a phase multiple of a; compare after aligning
  // the phase of the largest component.
  int pivot = 0;
  amps_.cwiseAbs().maxCoeff(&pivot);
  const Complex a = amps_[pivot];
  const Complex b = other.amps_[pivot];
  if (std::abs(a) <= tol) return (other.amps_ - amps_).norm() <= tol;
  if (std::abs(b) <= tol) return false;
  const Complex phase = (a / std::abs(a)) / (b / std::abs(b));
  return (amps_ - phase * other.amps_).norm() <= tol;
}

double SpinEnergyState::spin_purity() const {
  const SpinEnergyState n = normalized();
  Eigen::Matrix2cd psi;
  psi << n.amps_[0], n.amps_[1], n.amps_[2], n.amps_[3];
  const Matrix2c rho = psi * psi.adjoint();
  return (rho * rho).trace().real();
}

Matrix2c observable(double angle) {
  require_finite(angle, "observable angle");
  Matrix2c m;
  m << 0.0, std::polar(1.0, -angle), std::polar(1.0, angle), 0.0;
  return m;
}

Matrix2c observable(const ObservableAngle& angle) { return observable(angle.angle); }

Matrix2c projector(double angle) {
  require_finite(angle, "projector angle");
  Vector2c ket(1.0 / kSqrt2, std::polar(1.0 / kSqrt2, angle));
  return ket * ket.adjoint();
}

Matrix2c projector(const ObservableAngle& angle) { return projector(angle.angle); }

double joint_expectation(const SpinEnergyState& state, double alpha, double gamma) {
  require_normalized(state);
  const Matrix2c s = observable(alpha);
  const Matrix2c e = observable(gamma);
  Matrix4c op;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) op.block<2, 2>(2 * a, 2 * b) = s(a, b) * e;
  const Vector4c& psi = state.amplitudes();
  const Complex value = psi.dot(op * psi);  // conjugates the first argument
  if (std::abs(value.imag()) > kImaginaryResidueTol) {
    throw Error("joint expectation has imaginary residue " + std::to_string(value.imag()));
  }
  return std::clamp(value.real(), -1.0, 1.0);
}

void WitnessSettings::validate() const {
  require_finite(alpha1, "alpha1");
  require_finite(alpha2, "alpha2");
  require_finite(gamma1, "gamma1");
  require_finite(gamma2, "gamma2");
}

WitnessSettings WitnessSettings::shifted(double spin_offset, double energy_offset) const {
  return {alpha1 + spin_offset, alpha2 + spin_offset, gamma1 + energy_offset,
          gamma2 + energy_offset};
}

double chsh_value(const SpinEnergyState& state, const WitnessSettings& settings) {
  settings.validate();
  const std::array<double, 2> alphas{settings.alpha1, settings.alpha2};
  const std::array<double, 2> gammas{settings.gamma1, settings.gamma2};
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += kChshSigns[i][j] * joint_expectation(state, alphas[i], gammas[j]);
  return s;
}

WitnessSettings optimal_settings() { return {0.0, kPi / 2.0, -kPi / 4.0, kPi / 4.0}; }

double expectation_from_counts(const CountQuad& counts) {
  double signed_sum = 0.0;
  double total = 0.0;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      const double n = counts[k][l];
      if (!std::isfinite(n) || n < 0.0) throw InvalidInput("counts must be finite and non-negative");
      signed_sum += ((k + l) % 2 == 0 ? 1.0 : -1.0) * n;
      total += n;
    }
  }
  if (total <= 0.0) throw DegenerateData("all four counts are zero");
  return std::clamp(signed_sum / total, -1.0, 1.0);
}

}  // namespace mieze
