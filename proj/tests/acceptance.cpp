#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mieze/beamline.hpp"
#include "mieze/cosine_fit.hpp"
#include "mieze/errors.hpp"
#include "mieze/quantum_core.hpp"
#include "mieze/random.hpp"
#include "mieze/run_config.hpp"
#include "mieze/wavepacket.hpp"
#include "mieze/witness.hpp"

using namespace mieze;

namespace {

using Clock = std::chrono::steady_clock;

const std::filesystem::path kConfigDir = MIEZE_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Experiment {
  BeamlineConfig cfg;
  ScanPlan plan;
  AnalysisOptions options;
};

Experiment preset(const std::string& name) {
  const RunConfig rc = load_run_config(kConfigDir / name);
  return {rc.beamline.to_config(), rc.scan->to_plan(), rc.witness.to_options()};
}

Outcome ac1() {
  Outcome o;
  const SpinEnergyState bell = SpinEnergyState::bell(0.0);
  const WitnessSettings s = optimal_settings();
  const auto t0 = Clock::now();
  const double value = chsh_value(bell, s);
  const double dt = seconds_since(t0);
  o.require(std::abs(value - 2.0 * std::sqrt(2.0)) <= 1e-9, "S = " + fmt("%.15f", value));
  o.require(dt < 1e-3, "runtime " + fmt("%.2e", dt) + " s < 1 ms");
  return o;
}

Outcome ac2() {
  Outcome o;
  Experiment e = preset("cg4b-10khz.json");
  const double target = witness_from_contrast(e.cfg.effective_contrast());
  const int seeds = 500;
  int covered = 0;
  std::vector<double> sigmas;
  double sum_s = 0.0;
  const auto t0 = Clock::now();
  for (int k = 0; k < seeds; ++k) {
    e.plan.seed = 1 + static_cast<std::uint64_t>(k);
    const auto records = simulate_scan(e.cfg, e.plan, IntensityModel::ideal);
    const WitnessResult w = analyze_scan(e.cfg, e.plan, records, e.options).witness;
    covered += std::abs(w.S - target) <= 3.0 * w.sigma_S;
    sigmas.push_back(w.sigma_S);
    sum_s += w.S;
  }
  const double dt = seconds_since(t0);
  std::sort(sigmas.begin(), sigmas.end());
  const double median_sigma = sigmas[sigmas.size() / 2];
  const double coverage = static_cast<double>(covered) / seeds;
  o.require(std::abs(target - 2.404) <= 5e-4, "target " + fmt("%.4f", target));
  o.require(coverage >= 0.95, "coverage " + fmt("%.3f", coverage) + " >= 0.95, mean S " + fmt("%.4f", sum_s / seeds));
  // "Of order 0.02": within a factor sqrt(10) of 0.02.
  o.require(median_sigma >= 0.02 / std::sqrt(10.0) && median_sigma <= 0.02 * std::sqrt(10.0),
            "median sigma_S " + fmt("%.4f", median_sigma) + " in [0.0063, 0.063]");
  o.require(dt < 120.0, "runtime " + fmt("%.1f", dt) + " s < 2 min");
  return o;
}

Outcome ac3() {
  Outcome o;
  const Experiment e = preset("cg4b-100khz.json");
  const auto records = simulate_scan(e.cfg, e.plan, IntensityModel::ideal);
  const WitnessResult w = analyze_scan(e.cfg, e.plan, records, e.options).witness;
  o.require(std::abs(e.cfg.effective_contrast() - 0.82) <= 1e-12, "C = 0.82");
  o.require(std::abs(w.S - 2.319) <= 3.0 * w.sigma_S,
            "S = " + fmt("%.4f", w.S) + " +- " + fmt("%.4f", w.sigma_S) + " vs 2.319");
  return o;
}

Outcome ac4() {
  Outcome o;
  BeamlineConfig cfg;
  const double l2 = focusing_distance(cfg, 0.0);
  o.require(std::abs(l2 - 0.765) <= 1e-12, "L2 = " + fmt("%.12f", l2 * 1e3) + " mm");
  double spread = 0.0;
  for (double lambda = 0.2e-9; lambda <= 1.0e-9 + 1e-15; lambda += 0.05e-9) {
    cfg.wavelength = lambda;
    spread = std::max(spread, std::abs(focusing_distance(cfg, 0.0) - l2));
  }
  o.require(spread == 0.0, "max deviation over 0.2-1 nm " + fmt("%.1e", spread) + " m");
  return o;
}

Outcome ac5() {
  Outcome o;
  const BeamlineConfig cfg;
  const double per_turn = 2.0 * kPi / (spin_phase(cfg, 1.0) - spin_phase(cfg, 0.0));
  const double per_energy_turn = 2.0 * kPi / std::abs(energy_phase(cfg, {1.0}));
  o.require(std::abs(per_turn - 0.0987) <= 0.0005, "2 pi spin phase per " + fmt("%.5f", per_turn) + " A");
  o.require(std::abs(per_energy_turn * 1e3 - 71.9) <= 0.5,
            "2 pi energy phase per " + fmt("%.3f", per_energy_turn * 1e3) + " mm");
  return o;
}

Outcome ac6() {
  Outcome o;
  const auto t0 = Clock::now();
  const Experiment e = preset("cg4b-10khz.json");
  const BeamlineConfig& cfg = e.cfg;
  const WavePacketSpec spec = packet_spec(cfg);
  BeamlineConfig unit = cfg;
  unit.contrast = 1.0;
  unit.polarizer_efficiency = 1.0;
  const double wm = mieze_frequency(cfg);
  double min_contrast = 1.0;
  double max_dev = 0.0;
  for (double current : e.plan.currents) {
    for (double delta : e.plan.energy_values) {
      const PacketPipeline p = evolve_packet_pipeline(cfg, spec, cfg.coil_cal * current);
      const MiezeSignal s = beam_signal(p.psi2, p.focus_position + delta);
      min_contrast = std::min(min_contrast, s.contrast);
      const double a = spin_phase(cfg, current);
      const double g = energy_phase(cfg, {delta});
      for (int i = 0; i < 32; ++i) {
        const double t = (2.0 * kPi / wm) * i / 32.0;
        max_dev = std::max(max_dev, std::abs(s(t) - ideal_intensity(unit, a, g, t)));
      }
    }
  }
  o.require(min_contrast >= 0.99, "min packet contrast " + fmt("%.6f", min_contrast));
  o.require(max_dev <= 0.01, "max |I - I_ideal| " + fmt("%.2e", max_dev));

  const double cell = 1e-11;
  const double window = 300e-9;
  const PacketPipeline p = evolve_packet_pipeline(cfg, spec, cfg.coil_cal * e.plan.currents.front());
  const double v = p.psi0.group_velocity();
  struct Stage {
    const PacketState* state;
    double t;
  };
  double worst = 0.0;
  int checked = 0;
  for (const Stage& st : {Stage{&p.psi0, 0.0}, Stage{&p.psi1, 0.0}, Stage{&p.bell, 0.5 * cfg.L1 / v},
                          Stage{&p.psi2, cfg.L1 / v}, Stage{&p.psi2, p.focus_position / v}}) {
    for (Spin b : {Spin::up, Spin::down}) {
      const PeakSearch n = find_peak(*st.state, b, st.t, v * st.t, window, cell);
      worst = std::max(worst, std::abs(n.z - stationary_peak(*st.state, b, st.t)) / cell);
      ++checked;
    }
  }
  o.require(worst <= 1.0, std::to_string(checked) + " peaks, worst offset " + fmt("%.3f", worst) + " cells");
  const double dt = seconds_since(t0);
  o.require(dt < 30.0, "runtime " + fmt("%.1f", dt) + " s < 30 s");
  return o;
}

Outcome ac7() {
  Outcome o;
  int checked = 0;
  bool all = true;
  double worst_margin = INFINITY;
  for (const char* name : {"cg4b-10khz.json", "cg4b-100khz.json"}) {
    const Experiment e = preset(name);
    const WavePacketSpec spec = packet_spec(e.cfg);
    const CoherenceCheck limit = coherence_check(0.0, spec);
    o.require(std::abs(limit.limit - 50.0) <= 1e-9, std::string(name) + " limit " + fmt("%.1f", limit.limit));
    for (double current : e.plan.currents) {
      const CoherenceCheck c = coherence_check(spin_phase(e.cfg, current), spec);
      all = all && c.satisfied;
      worst_margin = std::min(worst_margin, c.margin);
      ++checked;
    }
    for (double delta : e.plan.energy_values) {
      const CoherenceCheck c = coherence_check(energy_phase(e.cfg, {delta}), spec);
      all = all && c.satisfied;
      worst_margin = std::min(worst_margin, c.margin);
      ++checked;
    }
  }
  o.require(all, std::to_string(checked) + " scan phases satisfied, worst margin " + fmt("%.2f", worst_margin));
  return o;
}

Outcome ac8() {
  Outcome o;
  const auto t0 = Clock::now();
  Philox4x64 rng(2024, 8);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_double(); };

  // Norm conservation through packet maps.
  PacketState s = PacketState::prepare(WavePacketSpec{});
  double norm_dev = 0.0;
  for (int i = 0; i < 200; ++i) {
    s = apply_spin_phase_k(s, uniform(-1e-3, 1e-3));
    s = apply_rf_flipper(s, uniform(1e5, 1e6), uniform(0.0, 1.0));
    norm_dev = std::max(norm_dev, std::abs(s.squared_norm() - 1.0));
  }
  o.require(norm_dev <= 1e-9, "norm deviation " + fmt("%.1e", norm_dev));

  // |S| <= 2 sqrt(2) over random states and settings.
  double max_s = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Vector4c v;
    for (int k = 0; k < 4; ++k) v[k] = Complex(uniform(-1, 1), uniform(-1, 1));
    const SpinEnergyState st = SpinEnergyState(Vector4c(v / v.norm()));
    const WitnessSettings ws{uniform(-kPi, kPi), uniform(-kPi, kPi), uniform(-kPi, kPi), uniform(-kPi, kPi)};
    max_s = std::max(max_s, std::abs(chsh_value(st, ws)));
  }
  o.require(max_s <= kTsirelson + 1e-12, "max |S| over 1e4 states " + fmt("%.6f", max_s));

  // Count-ratio scale invariance.
  double scale_dev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    CountQuad q{};
    for (auto& row : q)
      for (double& n : row) n = uniform(0.0, 1000.0);
    const double e = expectation_from_counts(q);
    const double lambda = uniform(0.01, 100.0);
    for (auto& row : q)
      for (double& n : row) n *= lambda;
    scale_dev = std::max(scale_dev, std::abs(expectation_from_counts(q) - e));
  }
  o.require(scale_dev <= 1e-12, "count scale invariance " + fmt("%.1e", scale_dev));

  // Noiseless fit round trip.
  double fit_dev = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double a = uniform(0.2, 2.0);
    const double b = uniform(0.0, 0.95) * a;
    const double phi = uniform(-kPi, kPi);
    std::vector<FitPoint> pts;
    for (int k = 0; k < 16; ++k) {
      const double x = 2.0 * kPi * k / 16.0;
      pts.push_back({x, a + b * std::cos(x + phi), 0.01});
    }
    const FitResult f = fit_cosine(pts);
    fit_dev = std::max({fit_dev, std::abs(f.A - a), std::abs(f.B - b),
                        b > 1e-6 ? std::abs(std::remainder(f.phi - phi, 2.0 * kPi)) : 0.0});
  }
  o.require(fit_dev <= 1e-9, "noiseless fit deviation " + fmt("%.1e", fit_dev));

  // Bootstrap against analytic sigma_S.
  const Experiment e = preset("cg4b-10khz.json");
  const auto records = simulate_scan(e.cfg, e.plan, IntensityModel::ideal);
  const WitnessResult w = analyze_scan(e.cfg, e.plan, records, e.options).witness;
  const BootstrapResult b = bootstrap_uncertainty(e.cfg, e.plan, records, e.options, 200, 7);
  const double ratio = b.sigma_S / w.sigma_S;
  o.require(std::abs(ratio - 1.0) <= 0.3, "bootstrap/analytic sigma_S " + fmt("%.3f", ratio));

  const double dt = seconds_since(t0);
  o.require(dt < 300.0, "runtime " + fmt("%.1f", dt) + " s < 5 min");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 Tsirelson reproduction", ac1}, {"AC2 witness at C = 0.85", ac2}, {"AC3 witness at C = 0.82", ac3},
      {"AC4 focusing distance", ac4},      {"AC5 calibration", ac5},         {"AC6 wave-packet agreement", ac6},
      {"AC7 coherence bounds", ac7},       {"AC8 property suites", ac8},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    std::printf("%s %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", name, seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
