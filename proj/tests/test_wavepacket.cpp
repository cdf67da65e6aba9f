#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "mieze/beamline.hpp"
#include "mieze/cosine_fit.hpp"
#include "mieze/errors.hpp"
#include "mieze/wavepacket.hpp"

using namespace mieze;

namespace {

constexpr double kCell = 1e-11;      // 0.01 nm position grid
constexpr double kWindow = 300e-9;   // +- 6 packet widths

WavePacketSpec gaussian_spec() { return WavePacketSpec{}; }

double k0() { return 2.0 * oracle::pi / 0.55e-9; }
double v0() { return oracle::velocity(0.55e-9); }

// Stationary beam of packets emitted at every delay tau, seen at fixed z and
// lab time t behind an analyzer at angle 0. A packet emitted tau later has
// branch amplitudes psi_b(z, t - tau) exp(-i nu_b tau); the sum over tau runs
// over the passage time t' = t - tau.
double beam_oracle(const PacketState& s, double z, double t) {
  const double nu_up = s.branch(Spin::up).law.frequency_shift;
  const double nu_dn = s.branch(Spin::down).law.frequency_shift;
  const double v = s.group_velocity();
  const double t0 = z / v;
  const double dt = 4e-9 / v;
  double sum = 0.0;
  for (double tp = t0 - 320e-9 / v; tp <= t0 + 320e-9 / v; tp += dt) {
    const double tau = t - tp;
    const Complex up = branch_amplitude(s, Spin::up, z, tp, Dispersion::co_moving) * std::polar(1.0, -nu_up * tau);
    const Complex dn = branch_amplitude(s, Spin::down, z, tp, Dispersion::co_moving) * std::polar(1.0, -nu_dn * tau);
    sum += 0.5 * std::norm(up + dn) * v * dt;
  }
  return sum;
}

// Cosine of the beam intensity over one MIEZE period.
FitResult period_scan(const PacketState& s, double omega_m, double z) {
  std::vector<FitPoint> pts;
  const int n = 16;
  for (int i = 0; i < n; ++i) {
    const double t = (2.0 * oracle::pi / omega_m) * i / n;
    pts.push_back({omega_m * t, beam_oracle(s, z, t), 1.0});
  }
  return fit_cosine(pts);
}

}  // namespace

TEST_CASE("packet spec validation") {
  WavePacketSpec s = gaussian_spec();
  CHECK_NOTHROW(s.validate());
  s.kappa = 0.9;
  CHECK_THROWS_AS(s.validate(), ConfigurationError);
  s = gaussian_spec();
  s.samples = 63;
  CHECK_THROWS_AS(s.validate(), ConfigurationError);
  s = gaussian_spec();
  s.span = 7.9;
  CHECK_THROWS_AS(s.validate(), ConfigurationError);
  s = gaussian_spec();
  s.bandwidth = 0.0;
  CHECK_THROWS_AS(k_distribution(s), ConfigurationError);
  s = gaussian_spec();
  s.wavelength = -1.0;
  CHECK_THROWS_AS(k_distribution(s), ConfigurationError);
}

TEST_CASE("coherence length") {
  CHECK(gaussian_spec().coherence_length() == doctest::Approx(275e-9).epsilon(1e-12));
  WavePacketSpec r;
  r.shape = PacketShape::triangular;
  r.wavelength = 0.6e-9;
  r.bandwidth = 0.116;
  CHECK(r.coherence_length() == doctest::Approx(5.2e-9).epsilon(0.01));
}

TEST_CASE("k distribution normalization and shape widths") {
  for (PacketShape shape : {PacketShape::gaussian, PacketShape::triangular, PacketShape::rectangular}) {
    WavePacketSpec s = gaussian_spec();
    s.shape = shape;
    const KDistribution d = k_distribution(s);
    CHECK(d.size() == 4096);
    double riemann = 0.0;
    for (double a : d.amplitude) riemann += a * a * d.step;
    CHECK(riemann == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.k.front() == doctest::Approx(d.k0 - 0.5 * s.span * s.delta_k()).epsilon(1e-14));
    CHECK(d.k.back() == doctest::Approx(d.k0 + 0.5 * s.span * s.delta_k()).epsilon(1e-14));
  }
  // Gaussian: FWHM of |g|^2 equals delta k.
  const WavePacketSpec s = gaussian_spec();
  const KDistribution d = k_distribution(s);
  const double peak = *std::max_element(d.amplitude.begin(), d.amplitude.end());
  double left = 0.0;
  double right = 0.0;
  for (std::size_t j = 1; j < d.size(); ++j) {
    const double a = d.amplitude[j - 1] * d.amplitude[j - 1] / (peak * peak);
    const double b = d.amplitude[j] * d.amplitude[j] / (peak * peak);
    if (a < 0.5 && b >= 0.5) left = d.k[j - 1] + (0.5 - a) / (b - a) * d.step;
    if (a >= 0.5 && b < 0.5) right = d.k[j - 1] + (a - 0.5) / (a - b) * d.step;
  }
  CHECK(right - left == doctest::Approx(s.delta_k()).epsilon(1e-4));
  // sigma_k of |g|^2 is delta k / (2 sqrt(2 ln 2)).
  CHECK(d.sigma_k() == doctest::Approx(s.delta_k() / (2.0 * std::sqrt(2.0 * std::log(2.0)))).epsilon(1e-6));
}

TEST_CASE("rectangular packet has equal in-band samples") {
  WavePacketSpec s = gaussian_spec();
  s.shape = PacketShape::rectangular;
  const KDistribution d = k_distribution(s);
  double first = 0.0;
  int in_band = 0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d.amplitude[j] == 0.0) continue;
    if (in_band++ == 0) first = d.amplitude[j];
    CHECK(d.amplitude[j] == first);
    CHECK(std::abs(d.k[j] - d.k0) <= 0.5 * s.delta_k() + 1e-9 * s.delta_k());
  }
  CHECK(in_band > 100);
}

TEST_CASE("triangular packet base half-width is delta k") {
  WavePacketSpec s = gaussian_spec();
  s.shape = PacketShape::triangular;
  const KDistribution d = k_distribution(s);
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double x = std::abs(d.k[j] - d.k0) / s.delta_k();
    if (x >= 1.0) CHECK(d.amplitude[j] == 0.0);
    if (x < 0.999) CHECK(d.amplitude[j] > 0.0);
  }
}

TEST_CASE("property: squared norm is conserved by every map") {
  PacketState s = PacketState::prepare(gaussian_spec());
  CHECK(s.squared_norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 20; ++i) {
    s = apply_spin_phase_k(s, (i - 10) * 3.7e-5);
    CHECK(std::abs(s.squared_norm() - 1.0) <= 1e-9);
    s = apply_constant_spin_phase(s, 0.3 * i);
    CHECK(std::abs(s.squared_norm() - 1.0) <= 1e-9);
    s = apply_rf_flipper(s, 2.0 * oracle::pi * (40e3 + 1e3 * i), 0.01 * i);
    CHECK(std::abs(s.squared_norm() - 1.0) <= 1e-9);
  }
  CHECK(s.history().size() == 60);
}

TEST_CASE("position-space norm matches the k-space norm") {
  const PacketState s = PacketState::prepare(gaussian_spec());
  double sum = 0.0;
  const double dz = 2e-9;
  for (double z = -600e-9; z <= 600e-9; z += dz) sum += position_intensity(s, z, 0.0, std::nullopt) * dz;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  // Free propagation with the full dispersion keeps the norm.
  sum = 0.0;
  const double t = 1e-7;
  for (double z = v0() * t - 1500e-9; z <= v0() * t + 1500e-9; z += dz) {
    sum += position_intensity(s, z, t, std::nullopt, Dispersion::exact) * dz;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("zero field integral is the identity") {
  const PacketState s = PacketState::prepare(gaussian_spec());
  const PacketState t = apply_spin_phase_k(s, 0.0);
  for (Spin b : {Spin::up, Spin::down}) {
    CHECK(t.branch(b).amplitude == s.branch(b).amplitude);
  }
}

TEST_CASE("alpha(k0) equals the beamline spin phase") {
  const BeamlineConfig cfg;
  for (double current : {-1.0, -0.37, 0.0, 0.5, 1.44}) {
    const double bl = cfg.coil_cal * current;
    CHECK(spin_phase_k(cfg.k0(), bl) == doctest::Approx(spin_phase(cfg, current)).epsilon(1e-12));
    CHECK(spin_phase_k(cfg.k0(), bl) == doctest::Approx(oracle::larmor(bl, 0.55e-9)).epsilon(1e-12));
  }
}

TEST_CASE("free packet is maximal at its center") {
  const PacketState s = PacketState::prepare(gaussian_spec());
  const double center = position_intensity(s, 0.0, 0.0, std::nullopt);
  for (double z : {-40e-9, -5e-9, -1e-10, 1e-10, 5e-9, 40e-9}) {
    CHECK(position_intensity(s, z, 0.0, std::nullopt) < center);
  }
  const PeakSearch p = find_peak(s, Spin::up, 0.0, 0.0, kWindow, kCell, Dispersion::exact);
  CHECK(std::abs(p.z) <= kCell);
}

TEST_CASE("coil splits the packet by alpha / k0") {
  const BeamlineConfig cfg;
  const double bl = 2.0 * oracle::pi / (oracle::gyromagnetic / cfg.velocity());  // alpha = 2 pi
  const PacketState s = apply_spin_phase_k(PacketState::prepare(gaussian_spec()), bl);
  const PeakSearch up = find_peak(s, Spin::up, 0.0, 0.0, kWindow, kCell, Dispersion::exact);
  const PeakSearch dn = find_peak(s, Spin::down, 0.0, 0.0, kWindow, kCell, Dispersion::exact);
  // z_p = hbar k0 t / m -+ alpha / (2 k0).
  CHECK(std::abs(up.z - (-oracle::pi / k0())) <= kCell);
  CHECK(std::abs(dn.z - (oracle::pi / k0())) <= kCell);
  CHECK(dn.z - up.z == doctest::Approx(0.55e-9).epsilon(2.0 * kCell / 0.55e-9));
  CHECK(std::abs(stationary_peak(s, Spin::up, 0.0) - up.z) <= kCell);
  CHECK(std::abs(stationary_peak(s, Spin::down, 0.0) - dn.z) <= kCell);
}

TEST_CASE("branch velocities after one flipper differ by 2 w1 / k0") {
  const double w1 = 2.0 * oracle::pi * 45e3;
  const PacketState s = apply_rf_flipper(PacketState::prepare(gaussian_spec()), w1, 0.0);
  const double t = 1e-3;
  const double c = v0() * t;
  const PeakSearch up0 = find_peak(s, Spin::up, 0.0, 0.0, kWindow, kCell);
  const PeakSearch dn0 = find_peak(s, Spin::down, 0.0, 0.0, kWindow, kCell);
  const PeakSearch up1 = find_peak(s, Spin::up, t, c, kWindow, kCell);
  const PeakSearch dn1 = find_peak(s, Spin::down, t, c, kWindow, kCell);
  const double dv = ((up1.z - up0.z) - (dn1.z - dn0.z)) / t;
  CHECK(2.0 * w1 / k0() == doctest::Approx(4.95e-5).epsilon(0.002));
  CHECK(dv == doctest::Approx(2.0 * w1 / k0()).epsilon(0.01));
}

TEST_CASE("branch separation at the second flipper") {
  const BeamlineConfig cfg;
  const PacketState bell = apply_rf_flipper(PacketState::prepare(gaussian_spec()), cfg.omega1(), 0.0);
  const double t = cfg.L1 / v0();
  const PeakSearch up = find_peak(bell, Spin::up, t, cfg.L1, kWindow, kCell);
  const PeakSearch dn = find_peak(bell, Spin::down, t, cfg.L1, kWindow, kCell);
  const double expected = 2.0 * cfg.omega1() * cfg.L1 / (k0() * v0());
  CHECK(expected == doctest::Approx(5.85e-9).epsilon(0.002));
  CHECK(up.z - dn.z == doctest::Approx(expected).epsilon(2.0 * kCell / expected));
  CHECK(up.z - dn.z < gaussian_spec().coherence_length());
}

TEST_CASE("peaks reconverge at L2 = 2 w1 L1 / w_m after the second flipper") {
  const BeamlineConfig cfg;
  const PacketPipeline p = evolve_packet_pipeline(cfg, gaussian_spec(), 0.0);
  const BranchPhaseLaw& u = p.psi2.branch(Spin::up).law;
  const BranchPhaseLaw& d = p.psi2.branch(Spin::down).law;
  const double k2 = k0() * k0();
  // Intersection of z_b(t) = (v0 t + P_b / k0^2) / (1 - S_b / k0^2).
  const double t_meet = (d.inverse_k_phase * (1.0 - u.wavenumber_shift / k2) -
                         u.inverse_k_phase * (1.0 - d.wavenumber_shift / k2)) /
                        (k2 * v0() * ((1.0 - d.wavenumber_shift / k2) - (1.0 - u.wavenumber_shift / k2)));
  const double z_meet = stationary_peak(p.psi2, Spin::up, t_meet);
  const double l2 = 2.0 * cfg.omega1() * cfg.L1 / mieze_frequency(cfg);
  CHECK(l2 == doctest::Approx(0.765).epsilon(1e-12));
  CHECK(z_meet - cfg.L1 == doctest::Approx(l2).epsilon(1e-6));
  CHECK(p.focus_position == doctest::Approx(cfg.L1 + l2).epsilon(1e-12));
  const PeakSearch up = find_peak(p.psi2, Spin::up, t_meet, z_meet, kWindow, kCell);
  const PeakSearch dn = find_peak(p.psi2, Spin::down, t_meet, z_meet, kWindow, kCell);
  CHECK(std::abs(up.z - dn.z) <= kCell);
}

TEST_CASE("stationary-phase peaks match numerical argmax at every pipeline stage") {
  const BeamlineConfig cfg;
  const PacketPipeline p = evolve_packet_pipeline(cfg, gaussian_spec(), cfg.coil_cal * -0.95);
  struct Stage {
    const PacketState* state;
    double t;
  };
  const double tf = p.focus_position / v0();
  for (const Stage& st : {Stage{&p.psi0, 0.0}, Stage{&p.psi1, 0.0}, Stage{&p.bell, 0.5 * cfg.L1 / v0()},
                          Stage{&p.psi2, 1.2 * cfg.L1 / v0()}, Stage{&p.psi2, tf}}) {
    for (Spin b : {Spin::up, Spin::down}) {
      const PeakSearch n = find_peak(*st.state, b, st.t, v0() * st.t, kWindow, kCell);
      CHECK(std::abs(n.z - stationary_peak(*st.state, b, st.t)) <= kCell);
    }
  }
}

TEST_CASE("exact and co-moving propagation agree at t = 0") {
  const PacketState s = apply_rf_flipper(PacketState::prepare(gaussian_spec()), 2.0 * oracle::pi * 45e3, 0.0);
  for (double z = -100e-9; z <= 100e-9; z += 17e-9) {
    CHECK(position_intensity(s, z, 0.0, 0.3, Dispersion::exact) ==
          doctest::Approx(position_intensity(s, z, 0.0, 0.3, Dispersion::co_moving)).epsilon(1e-12));
  }
}

TEST_CASE("refusal: under-resolved quadrature raises") {
  WavePacketSpec coarse = gaussian_spec();
  coarse.samples = 64;
  const PacketState s = PacketState::prepare(coarse);
  CHECK_THROWS_AS(position_intensity(s, v0() * 1e-3, 1e-3, std::nullopt, Dispersion::exact), ResolutionError);
  CHECK_THROWS_AS(position_intensity(s, 1e-3, 0.0, std::nullopt), ResolutionError);
  const PacketState fine = PacketState::prepare(gaussian_spec());
  CHECK_THROWS_AS(position_intensity(fine, v0() * 1e-3, 1e-3, std::nullopt, Dispersion::exact), ResolutionError);
  CHECK_NOTHROW(position_intensity(fine, v0() * 1e-3, 1e-3, std::nullopt, Dispersion::co_moving));
  const BeamlineConfig cfg;
  const PacketPipeline p = evolve_packet_pipeline(cfg, coarse, 0.0);
  CHECK_THROWS_AS(beam_signal(p.psi2, p.focus_position + 500.0), ResolutionError);
}

TEST_CASE("projected intensity at the focus is the MIEZE cosine") {
  const BeamlineConfig cfg;
  const double wm = mieze_frequency(cfg);
  const double current = -0.93;
  const PacketPipeline p = evolve_packet_pipeline(cfg, gaussian_spec(), cfg.coil_cal * current);
  const FitResult f = period_scan(p.psi2, wm, p.focus_position);
  CHECK(f.contrast >= 0.99);
  // Period: the fit used x = w_m tau, so a perfect fit means period 2 pi / w_m.
  CHECK(f.chi_square <= 1e-20);
  const double alpha = spin_phase(cfg, current);
  CHECK(std::abs(std::remainder(f.phi - alpha, 2.0 * oracle::pi)) <= 0.01);
}

TEST_CASE("detector offset shifts the cosine by gamma(delta)") {
  const BeamlineConfig cfg;
  const double wm = mieze_frequency(cfg);
  const PacketPipeline p = evolve_packet_pipeline(cfg, gaussian_spec(), 0.0);
  const double z0 = p.focus_position;
  const double phi0 = period_scan(p.psi2, wm, z0).phi;
  for (double delta : {-0.070, -0.035, -0.01, 0.02, 0.05}) {
    const double z = z0 + delta;
    const FitResult f = period_scan(p.psi2, wm, z);
    const double gamma = energy_phase(cfg, {delta});
    CHECK(std::abs(gamma) <= 2.0 * oracle::pi);
    const double shift = std::remainder(f.phi - phi0 - gamma, 2.0 * oracle::pi) + gamma;
    CHECK(shift == doctest::Approx(gamma).epsilon(0.01));
  }
}

TEST_CASE("beam signal agrees with the ideal intensity model") {
  const BeamlineConfig cfg;
  const double wm = mieze_frequency(cfg);
  for (double current : {-1.0, -0.94, -0.88}) {
    for (double delta : {0.0, -0.0175, -0.07}) {
      const PacketPipeline p = evolve_packet_pipeline(cfg, gaussian_spec(), cfg.coil_cal * current);
      const MiezeSignal s = beam_signal(p.psi2, p.focus_position + delta);
      CHECK(s.frequency == doctest::Approx(wm).epsilon(1e-12));
      CHECK(s.contrast >= 0.99);
      const double a = spin_phase(cfg, current);
      const double g = energy_phase(cfg, {delta});
      for (double t = 0.0; t < 1e-4; t += 7e-6) {
        BeamlineConfig unit = cfg;
        unit.contrast = 1.0;
        CHECK(s(t) == doctest::Approx(ideal_intensity(unit, a, g, t)).epsilon(0.01));
      }
    }
  }
}

TEST_CASE("contrast envelope") {
  const BeamlineConfig cfg;
  const WavePacketSpec spec = gaussian_spec();
  std::vector<double> deltas;
  for (double d = -0.035; d <= 0.035 + 1e-12; d += 0.005) deltas.push_back(d);
  for (const auto& e : contrast_envelope(cfg, spec, deltas)) CHECK(e.contrast > 0.99);

  std::vector<double> wide;
  for (int i = -40; i <= 40; ++i) wide.push_back(i * 1.0);
  const auto env = contrast_envelope(cfg, spec, wide);
  const std::size_t mid = 40;
  CHECK(env[mid].delta == 0.0);
  CHECK(env[mid].contrast >= 0.99);
  for (std::size_t i = 0; i < mid; ++i) {
    CHECK(env[mid - i - 1].contrast < env[mid - i].contrast);
    CHECK(env[mid + i + 1].contrast < env[mid + i].contrast);
    CHECK(env[mid + i + 1].contrast == doctest::Approx(env[mid - i - 1].contrast).epsilon(0.01));
  }
}

TEST_CASE("contrast at a branch separation of beta_l") {
  const BeamlineConfig cfg;
  const WavePacketSpec spec = gaussian_spec();
  // Branch separation at the detector is w_m delta / (k0 v).
  const double delta = spec.coherence_length() * k0() * v0() / mieze_frequency(cfg);
  const double c = contrast_envelope(cfg, spec, std::vector<double>{delta}).front().contrast;
  CHECK(c < 0.5);
  // Gaussian oracle exp(-(sigma_k beta_l)^2 / 2) with sigma_k = dk / (2 sqrt(2 ln 2)).
  const double s = 2.0 * oracle::pi / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  CHECK(c == doctest::Approx(std::exp(-0.5 * s * s)).epsilon(0.02));
  // Golden value recorded from this build.
  CHECK(c == doctest::Approx(0.028469).epsilon(1e-3));
}

TEST_CASE("envelope width scales with the inverse bandwidth") {
  const BeamlineConfig cfg;
  WavePacketSpec narrow = gaussian_spec();
  WavePacketSpec broad = gaussian_spec();
  broad.bandwidth = 0.116;
  std::vector<double> dn, db;
  for (int i = -400; i <= 400; ++i) {
    dn.push_back(i * 0.1);
    db.push_back(i * 0.002);
  }
  const auto wn = envelope_width(contrast_envelope(cfg, narrow, dn));
  const auto wb = envelope_width(contrast_envelope(cfg, broad, db));
  REQUIRE(wn.has_value());
  REQUIRE(wb.has_value());
  CHECK(*wn / *wb == doctest::Approx(0.116 / 0.002).epsilon(0.1));

  WavePacketSpec reseda = broad;
  reseda.shape = PacketShape::triangular;
  reseda.wavelength = 0.6e-9;
  BeamlineConfig rcfg = cfg;
  rcfg.wavelength = 0.6e-9;
  rcfg.bandwidth = 0.116;
  const auto wr = envelope_width(contrast_envelope(rcfg, reseda, db));
  REQUIRE(wr.has_value());
  CHECK(*wr < *wn / 20.0);
}

TEST_CASE("envelope width helper") {
  const std::vector<EnvelopePoint> tri{{-2, 0.0}, {-1, 0.5}, {0, 1.0}, {1, 0.5}, {2, 0.0}};
  CHECK(envelope_width(tri).value() == doctest::Approx(2.0));
  const std::vector<EnvelopePoint> flat{{-1, 1.0}, {0, 1.0}, {1, 1.0}};
  CHECK_FALSE(envelope_width(flat).has_value());
}

TEST_CASE("coherence bounds") {
  const BeamlineConfig cfg;
  const WavePacketSpec spec = gaussian_spec();
  const CoherenceCheck limit = coherence_check(2.0 * oracle::pi * 50.0, spec);
  CHECK(limit.limit == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(limit.margin == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(limit.satisfied);
  CHECK_FALSE(coherence_check(2.0 * oracle::pi * 50.5, spec).satisfied);

  const CoherenceCheck a = coherence_check(spin_phase(cfg, 0.12), spec);
  CHECK(a.precessions == doctest::Approx(1.2).epsilon(0.03));
  CHECK(a.satisfied);
  CHECK(a.margin > 10.0);
  CHECK(a.margin == doctest::Approx(1.0 / (10.0 * 0.002) / a.precessions).epsilon(1e-12));

  const CoherenceCheck g = coherence_check(energy_phase(cfg, {0.070}), spec);
  CHECK(g.precessions == doctest::Approx(0.97).epsilon(0.01));
  CHECK(g.satisfied);

  WavePacketSpec k3 = spec;
  k3.kappa = 3.0;
  CHECK(coherence_check(1.0, k3).limit == doctest::Approx(150.0));
  CHECK(std::isinf(coherence_check(0.0, spec).margin));
  CHECK_THROWS_AS(coherence_check(NAN, spec), InvalidInput);
}
