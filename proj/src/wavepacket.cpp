#include "mieze/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mieze/errors.hpp"

namespace mieze {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigurationError(message);
}

double shape_amplitude(PacketShape shape, double kappa, double delta_k) {
  const double x = kappa / delta_k;
  switch (shape) {
    case PacketShape::gaussian:
      // |g|^2 = exp(-4 ln2 x^2) has FWHM delta_k.
      return std::exp(-2.0 * std::log(2.0) * x * x);
    case PacketShape::triangular:
      return std::sqrt(std::max(0.0, 1.0 - std::abs(x)));
    case PacketShape::rectangular:
      return std::abs(x) <= 0.5 ? 1.0 : 0.0;
  }
  return 0.0;
}

void guard_phase_slope(double max_slope, double step, const char* what) {
  const double per_step = max_slope * step;
  if (!(per_step <= kMaxPhaseStep)) {
    throw ResolutionError(std::string(what) + ": phase advances " + std::to_string(per_step) +
                          " rad per k sample (limit " + std::to_string(kMaxPhaseStep) + ")");
  }
}

}  // namespace

void WavePacketSpec::validate() const {
  check(std::isfinite(wavelength) && wavelength > 0.0, "wavelength must be positive");
  check(std::isfinite(bandwidth) && bandwidth > 0.0, "bandwidth must be positive");
  check(std::isfinite(kappa) && kappa >= 1.0, "kappa must be at least 1");
  check(samples >= 64, "k grid needs at least 64 samples");
  check(std::isfinite(span) && span >= 8.0, "k grid span must be at least 8 delta k");
  check(span * bandwidth < 2.0, "k grid reaches k <= 0; reduce span or bandwidth");
}

double KDistribution::sigma_k() const {
  double m2 = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double d = k[j] - k0;
    m2 += weight[j] * amplitude[j] * amplitude[j] * d * d;
  }
  return std::sqrt(m2);
}

KDistribution k_distribution(const WavePacketSpec& spec) {
  spec.validate();
  KDistribution dist;
  const std::size_t n = spec.samples;
  const double dk = spec.delta_k();
  const double width = spec.span * dk;
  dist.k0 = spec.k0();
  dist.step = width / static_cast<double>(n - 1);
  dist.k.resize(n);
  dist.weight.assign(n, dist.step);
  dist.amplitude.resize(n);
  dist.weight.front() *= 0.5;
  dist.weight.back() *= 0.5;

  double norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double offset = -0.5 * width + static_cast<double>(j) * dist.step;
    dist.k[j] = dist.k0 + offset;
    dist.amplitude[j] = shape_amplitude(spec.shape, offset, dk);
    norm += dist.weight[j] * dist.amplitude[j] * dist.amplitude[j];
  }
  check(norm > 0.0, "packet has no samples inside the band");
  const double scale = 1.0 / std::sqrt(norm);
  for (double& a : dist.amplitude) a *= scale;
  return dist;
}

PacketState PacketState::prepare(const WavePacketSpec& spec, const PhysicalConstants& constants) {
  PacketState state;
  state.spec_ = spec;
  state.constants_ = constants;
  auto grid = std::make_shared<KDistribution>(k_distribution(spec));
  const double h = 1.0 / kSqrt2;
  for (auto& b : state.branches_) {
    b.amplitude.resize(grid->size());
    for (std::size_t j = 0; j < grid->size(); ++j) b.amplitude[j] = h * grid->amplitude[j];
  }
  state.grid_ = std::move(grid);
  return state;
}

double PacketState::squared_norm() const {
  double total = 0.0;
  for (const auto& b : branches_) {
    for (std::size_t j = 0; j < b.amplitude.size(); ++j) total += grid_->weight[j] * std::norm(b.amplitude[j]);
  }
  return total;
}

double PacketState::group_velocity() const noexcept { return hbar_over_m() * grid_->k0; }

double spin_phase_k(double k, double field_integral, const PhysicalConstants& constants) {
  if (!(k > 0.0)) throw InvalidInput("wavenumber must be positive");
  return constants.neutron_mass * constants.gyromagnetic * field_integral / (constants.hbar * k);
}

PacketState apply_spin_phase_k(const PacketState& state, double field_integral) {
  if (!std::isfinite(field_integral)) throw InvalidInput("field integral must be finite");
  PacketState out = state;
  const auto& c = state.constants_;
  const double a = c.neutron_mass * c.gyromagnetic * field_integral / c.hbar;
  const auto& k = state.grid_->k;
  auto& up = out.branches_[0];
  auto& down = out.branches_[1];
  for (std::size_t j = 0; j < k.size(); ++j) {
    const Complex rot = std::polar(1.0, -0.5 * a / k[j]);
    up.amplitude[j] *= rot;
    down.amplitude[j] *= std::conj(rot);
  }
  up.law.inverse_k_phase -= 0.5 * a;
  down.law.inverse_k_phase += 0.5 * a;
  out.history_.push_back({ElementKind::spin_phase_coil, field_integral, 0.0});
  return out;
}

PacketState apply_constant_spin_phase(const PacketState& state, double phase) {
  if (!std::isfinite(phase)) throw InvalidInput("phase must be finite");
  PacketState out = state;
  const Complex rot = std::polar(1.0, -0.5 * phase);
  for (auto& a : out.branches_[0].amplitude) a *= rot;
  for (auto& a : out.branches_[1].amplitude) a *= std::conj(rot);
  out.branches_[0].law.constant_phase -= 0.5 * phase;
  out.branches_[1].law.constant_phase += 0.5 * phase;
  out.history_.push_back({ElementKind::constant_spin_phase, phase, 0.0});
  return out;
}

PacketState apply_rf_flipper(const PacketState& state, double omega, double z_flipper) {
  if (!std::isfinite(omega) || !(omega > 0.0)) throw InvalidInput("flipper frequency must be positive");
  if (!std::isfinite(z_flipper)) throw InvalidInput("flipper position must be finite");
  PacketState out = state;
  const double m_omega = omega / state.hbar_over_m();
  const auto& k = state.grid_->k;

  // Leaving as up: was down, gains hbar omega, q = k + m omega / (hbar k).
  PacketBranch up = state.branches_[1];
  // Leaving as down: was up, loses hbar omega.
  PacketBranch down = state.branches_[0];
  for (std::size_t j = 0; j < k.size(); ++j) {
    const Complex match = std::polar(1.0, -m_omega * z_flipper / k[j]);
    up.amplitude[j] *= match;
    down.amplitude[j] *= std::conj(match);
  }
  up.law.wavenumber_shift += m_omega;
  up.law.frequency_shift += omega;
  up.law.inverse_k_phase -= m_omega * z_flipper;
  down.law.wavenumber_shift -= m_omega;
  down.law.frequency_shift -= omega;
  down.law.inverse_k_phase += m_omega * z_flipper;

  out.branches_[0] = std::move(up);
  out.branches_[1] = std::move(down);
  out.history_.push_back({ElementKind::rf_flipper, omega, z_flipper});
  return out;
}

Complex branch_amplitude(const PacketState& state, Spin spin, double z, double t, Dispersion dispersion) {
  if (!std::isfinite(z) || !std::isfinite(t)) throw InvalidInput("z and t must be finite");
  const KDistribution& grid = state.grid();
  const PacketBranch& b = state.branch(spin);
  const double hm = state.hbar_over_m();
  const double zeta = z - hm * grid.k0 * t;
  const double chirp = dispersion == Dispersion::exact ? 0.5 * hm * t : 0.0;
  const double shift_z = b.law.wavenumber_shift * z;
  const double static_p = b.law.inverse_k_phase;

  double max_slope = 0.0;
  Complex sum = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double k = grid.k[j];
    const double kappa = k - grid.k0;
    const double phase = kappa * zeta - chirp * kappa * kappa + shift_z / k;
    const double slope = zeta - 2.0 * chirp * kappa - (shift_z + static_p) / (k * k);
    max_slope = std::max(max_slope, std::abs(slope));
    sum += grid.weight[j] * b.amplitude[j] * std::polar(1.0, phase);
  }
  guard_phase_slope(max_slope, grid.step, "position quadrature under-resolved");
  return sum * std::polar(1.0 / std::sqrt(kTwoPi), -b.law.frequency_shift * t);
}

double position_intensity(const PacketState& state, double z, double t, std::optional<double> spin_projection,
                          Dispersion dispersion) {
  const Complex up = branch_amplitude(state, Spin::up, z, t, dispersion);
  const Complex down = branch_amplitude(state, Spin::down, z, t, dispersion);
  if (!spin_projection) return std::norm(up) + std::norm(down);
  if (!std::isfinite(*spin_projection)) throw InvalidInput("projection angle must be finite");
  return 0.5 * std::norm(up + std::polar(1.0, -*spin_projection) * down);
}

double stationary_peak(const PacketState& state, Spin spin, double t) {
  const BranchPhaseLaw& law = state.branch(spin).law;
  const double k0 = state.grid().k0;
  const double k2 = k0 * k0;
  return (state.group_velocity() * t + law.inverse_k_phase / k2) / (1.0 - law.wavenumber_shift / k2);
}

PeakSearch find_peak(const PacketState& state, Spin spin, double t, double center, double window, double cell,
                     Dispersion dispersion) {
  if (!(window > 0.0) || !(cell > 0.0)) throw InvalidInput("peak window and cell must be positive");
  auto density = [&](double z) { return std::norm(branch_amplitude(state, spin, z, t, dispersion)); };

  constexpr int kCoarse = 400;
  const double coarse = 2.0 * window / kCoarse;
  double best_z = center;
  double best = -1.0;
  for (int i = 0; i <= kCoarse; ++i) {
    const double z = center - window + i * coarse;
    const double v = density(z);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }

  const int fine = static_cast<int>(std::ceil(2.0 * coarse / cell));
  const double start = best_z - fine * cell;
  best = -1.0;
  double refined = best_z;
  for (int i = 0; i <= 2 * fine; ++i) {
    const double z = start + i * cell;
    const double v = density(z);
    if (v > best) {
      best = v;
      refined = z;
    }
  }
  return {refined, cell};
}

double MiezeSignal::operator()(double t) const { return mean * (1.0 + contrast * std::cos(frequency * t + phase)); }

MiezeSignal beam_signal(const PacketState& state, double z, double analyzer_angle) {
  if (!std::isfinite(z) || !std::isfinite(analyzer_angle)) throw InvalidInput("z and angle must be finite");
  const KDistribution& grid = state.grid();
  const PacketBranch& up = state.branch(Spin::up);
  const PacketBranch& down = state.branch(Spin::down);
  const double ds = (up.law.wavenumber_shift - down.law.wavenumber_shift) * z;
  const double dp = up.law.inverse_k_phase - down.law.inverse_k_phase;

  // Time-averaged density of each k component in a stationary beam is
  // proportional to 1/k.
  double total = 0.0;
  double max_slope = 0.0;
  Complex cross = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double k = grid.k[j];
    const double w = grid.weight[j] / k;
    total += w * (std::norm(up.amplitude[j]) + std::norm(down.amplitude[j]));
    cross += w * up.amplitude[j] * std::conj(down.amplitude[j]) * std::polar(1.0, ds / k);
    max_slope = std::max(max_slope, std::abs(ds + dp) / (k * k));
  }
  guard_phase_slope(max_slope, grid.step, "beam signal quadrature under-resolved");
  if (!(total > 0.0)) throw DegenerateData("packet has zero weight");

  MiezeSignal s;
  s.mean = 0.5;
  s.contrast = std::min(1.0, 2.0 * std::abs(cross) / total);
  s.phase = -std::arg(cross) - analyzer_angle;
  s.frequency = up.law.frequency_shift - down.law.frequency_shift;
  return s;
}

WavePacketSpec packet_spec(const BeamlineConfig& cfg, PacketShape shape, double kappa) {
  WavePacketSpec spec;
  spec.shape = shape;
  spec.wavelength = cfg.wavelength;
  spec.bandwidth = cfg.bandwidth;
  spec.kappa = kappa;
  return spec;
}

PacketPipeline evolve_packet_pipeline(const BeamlineConfig& cfg, const WavePacketSpec& spec,
                                      double coil_field_integral, double guide_phase) {
  cfg.validate();
  const double focus = cfg.L1 + focusing_distance(cfg, 0.0);
  PacketState psi0 = PacketState::prepare(spec, cfg.constants);
  PacketState psi1 = apply_spin_phase_k(psi0, coil_field_integral);
  if (guide_phase != 0.0) psi1 = apply_constant_spin_phase(psi1, guide_phase);
  PacketState bell = apply_rf_flipper(psi1, cfg.omega1(), 0.0);
  PacketState psi2 = apply_rf_flipper(bell, cfg.omega2(), cfg.L1);
  return {std::move(psi0), std::move(psi1), std::move(bell), std::move(psi2), cfg.L1, focus};
}

std::vector<EnvelopePoint> contrast_envelope(const BeamlineConfig& cfg, const WavePacketSpec& spec,
                                             std::span<const double> deltas) {
  const PacketPipeline p = evolve_packet_pipeline(cfg, spec, 0.0);
  std::vector<EnvelopePoint> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    if (!std::isfinite(d)) throw InvalidInput("detector offset must be finite");
    // The time signal is an exact cosine, so its fitted amplitude is the
    // closed-form contrast.
    out.push_back({d, beam_signal(p.psi2, p.focus_position + d).contrast});
  }
  return out;
}

std::optional<double> envelope_width(std::span<const EnvelopePoint> envelope) {
  if (envelope.size() < 3) return std::nullopt;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < envelope.size(); ++i) {
    if (envelope[i].contrast > envelope[peak].contrast) peak = i;
  }
  const double half = 0.5 * envelope[peak].contrast;
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const auto& a = envelope[inside];
    const auto& b = envelope[outside];
    const double f = (a.contrast - half) / (a.contrast - b.contrast);
    return a.delta + f * (b.delta - a.delta);
  };

  std::optional<double> left;
  for (std::size_t i = peak; i > 0; --i) {
    if (envelope[i - 1].contrast < half) {
      left = crossing(i, i - 1);
      break;
    }
  }
  std::optional<double> right;
  for (std::size_t i = peak; i + 1 < envelope.size(); ++i) {
    if (envelope[i + 1].contrast < half) {
      right = crossing(i, i + 1);
      break;
    }
  }
  if (!left || !right) return std::nullopt;
  return *right - *left;
}

CoherenceCheck coherence_check(double phase, const WavePacketSpec& spec) {
  if (!std::isfinite(phase)) throw InvalidInput("phase must be finite");
  if (!(spec.bandwidth > 0.0) || !(spec.kappa >= 1.0)) throw ConfigurationError("invalid packet spec");
  CoherenceCheck c;
  c.precessions = std::abs(phase) / kTwoPi;
  c.limit = spec.kappa / (kCoherenceMarginFactor * spec.bandwidth);
  c.margin = c.precessions > 0.0 ? c.limit / c.precessions : std::numeric_limits<double>::infinity();
  c.satisfied = c.margin >= 1.0;
  return c;
}

}  // namespace mieze
