#include "mieze/witness.hpp"

#include <cmath>
#include <sstream>

#include "mieze/constants.hpp"
#include "mieze/errors.hpp"
#include "mieze/random.hpp"

namespace mieze {

namespace {

std::array<double, 2> alphas(const WitnessSettings& s) { return {s.alpha1, s.alpha2}; }
std::array<double, 2> gammas(const WitnessSettings& s) { return {s.gamma1, s.gamma2}; }

double circular_distance(double a, double b) { return std::abs(std::remainder(a - b, kTwoPi)); }

void check_records(const ScanPlan& plan, std::span<const CountsRecord> records) {
  if (records.empty()) throw InvalidInput("no scan points");
  for (const auto& r : records) {
    if (r.counts.size() != static_cast<std::size_t>(plan.channels)) {
      throw InvalidInput("scan point has " + std::to_string(r.counts.size()) + " channels, expected " +
                         std::to_string(plan.channels));
    }
  }
}

std::vector<FitPoint> scan_fit_points(const BeamlineConfig& cfg, const ScanPlan& plan,
                                      std::span<const CountsRecord> records, const AnalysisOptions& options,
                                      std::vector<FitResult>* time_fits) {
  check_records(plan, records);
  if (options.reference_channel < 0 || options.reference_channel >= plan.channels) {
    throw InvalidInput("reference channel " + std::to_string(options.reference_channel) + " out of range");
  }
  const auto ref = static_cast<std::size_t>(options.reference_channel);
  const double n0 = plan.counts_scale;
  std::vector<FitPoint> points;
  points.reserve(records.size());
  for (const auto& r : records) {
    const double x = scan_phase(cfg, plan.axis, plan.detuning_time, r.current, r.energy_value);
    if (options.path == AnalysisPath::single_channel) {
      const double c = static_cast<double>(r.counts[ref]);
      points.push_back({x, c / n0, std::sqrt(std::max(c, 1.0)) / n0});
    } else {
      const FitResult f = fit_time_series(r, options.fit);
      const double xc = channel_phase(options.reference_channel, plan.channels);
      const Eigen::Vector3d g(1.0, std::cos(xc), -std::sin(xc));
      const double sigma = std::sqrt(std::max(0.0, g.dot(f.linear_covariance * g)));
      points.push_back({x, f(xc) / n0, sigma / n0});
      if (time_fits) time_fits->push_back(f);
    }
  }
  return points;
}

}  // namespace

Classification classify(double s) {
  const double a = std::abs(s);
  if (a <= 2.0 + kClassificationTolerance) return Classification::classical;
  if (a <= kTsirelson + kClassificationTolerance) return Classification::quantum;
  return Classification::unphysical;
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::classical:
      return "classical";
    case Classification::quantum:
      return "quantum";
    case Classification::unphysical:
      return "unphysical";
  }
  return "unknown";
}

ExpectationGrid expectation_grid(const FitResult& fit, const WitnessSettings& settings, PhaseReference reference) {
  settings.validate();
  if (!(fit.A > 0.0)) throw FitError("fit mean level must be positive", "A=" + std::to_string(fit.A));
  const double a = fit.A;
  const double origin = reference == PhaseReference::absolute ? fit.phi : 0.0;
  const Eigen::Vector3d dC(-fit.contrast / a, std::cos(fit.phi) / a, std::sin(fit.phi) / a);
  ExpectationGrid g;
  const auto al = alphas(settings);
  const auto ga = gammas(settings);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double theta = al[i] + ga[j];
      double e = 0.0;
      Eigen::Vector3d grad;
      if (reference == PhaseReference::fitted) {
        e = fit.contrast * std::cos(theta);
        grad = std::cos(theta) * dC;
      } else {
        e = fit.contrast * std::cos(theta + origin);
        grad = Eigen::Vector3d(-e / a, std::cos(theta) / a, -std::sin(theta) / a);
      }
      g.value[i][j] = e;
      g.gradient[i][j] = grad;
      g.sigma[i][j] = std::sqrt(std::max(0.0, grad.dot(fit.linear_covariance * grad)));
    }
  }
  return g;
}

WitnessResult witness(const Grid2& E, const Grid2& sigma) {
  WitnessResult r;
  double var = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (!std::isfinite(E[i][j]) || !std::isfinite(sigma[i][j]) || sigma[i][j] < 0.0) {
        throw InvalidInput("expectation values and uncertainties must be finite");
      }
      r.S += kChshSigns[i][j] * E[i][j];
      var += sigma[i][j] * sigma[i][j];
    }
  }
  r.E = E;
  r.sigma_E = sigma;
  r.sigma_S = std::sqrt(var);
  r.classification = classify(r.S);
  return r;
}

WitnessResult witness(const ExpectationGrid& grid, const Eigen::Matrix3d& linear_covariance) {
  WitnessResult r = witness(grid.value, grid.sigma);
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) g += kChshSigns[i][j] * grid.gradient[i][j];
  r.sigma_S = std::sqrt(std::max(0.0, g.dot(linear_covariance * g)));
  return r;
}

WitnessResult fit_witness(const FitResult& fit, const WitnessSettings& settings, PhaseReference reference) {
  return witness(expectation_grid(fit, settings, reference), fit.linear_covariance);
}

double witness_from_contrast(double contrast) {
  if (!std::isfinite(contrast) || contrast < 0.0 || contrast > 1.0) {
    throw InvalidInput("contrast must lie in [0, 1]");
  }
  return kTsirelson * contrast;
}

CountWitness count_witness(const BeamlineConfig& cfg, const ScanPlan& plan, std::span<const CountsRecord> records,
                           const AnalysisOptions& options, double phase_origin) {
  check_records(plan, records);
  const auto ref = static_cast<std::size_t>(options.reference_channel);
  std::vector<double> phases;
  phases.reserve(records.size());
  for (const auto& r : records) {
    phases.push_back(scan_phase(cfg, plan.axis, plan.detuning_time, r.current, r.energy_value));
  }
  auto nearest = [&](double target) {
    std::size_t best = 0;
    double best_d = circular_distance(phases[0], target);
    for (std::size_t p = 1; p < records.size(); ++p) {
      const double d = circular_distance(phases[p], target);
      const bool tie = std::abs(d - best_d) <= 1e-12;
      if ((!tie && d < best_d) ||
          (tie && std::abs(records[p].current) < std::abs(records[best].current))) {
        best = p;
        best_d = d;
      }
    }
    return best;
  };

  CountWitness out;
  Grid2 E{};
  Grid2 sigma{};
  const auto al = alphas(options.settings);
  const auto ga = gammas(options.settings);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CountQuad quad{};
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
          const double target = al[i] + ga[j] + (k + l) * kPi - phase_origin;
          const std::size_t p = nearest(target);
          CountCell& cell = out.cells[i][j][k][l];
          cell = {p, target, phases[p], records[p].counts[ref]};
          quad[k][l] = static_cast<double>(cell.counts);
        }
      }
      const double e = expectation_from_counts(quad);
      double total = 0.0;
      for (const auto& row : quad)
        for (double n : row) total += n;
      double var = 0.0;
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
          const double s = (k + l) % 2 == 0 ? 1.0 : -1.0;
          const double d = (s - e) / total;
          var += d * d * quad[k][l];
        }
      }
      E[i][j] = e;
      sigma[i][j] = std::sqrt(var);
    }
  }
  out.result = witness(E, sigma);
  return out;
}

WitnessAnalysis analyze_scan(const BeamlineConfig& cfg, const ScanPlan& plan, std::span<const CountsRecord> records,
                             const AnalysisOptions& options) {
  WitnessAnalysis a;
  a.points = scan_fit_points(cfg, plan, records, options,
                             options.path == AnalysisPath::cosine_fits ? &a.time_fits : nullptr);
  a.global_fit = fit_global(a.points, options.fit);
  a.witness = fit_witness(a.global_fit, options.settings, options.reference);
  const double origin = options.reference == PhaseReference::fitted ? a.global_fit.phi : 0.0;
  a.count_witness = count_witness(cfg, plan, records, options, origin);
  return a;
}

BootstrapResult bootstrap_uncertainty(const BeamlineConfig& cfg, const ScanPlan& plan,
                                      std::span<const CountsRecord> records, const AnalysisOptions& options,
                                      int resamples, std::uint64_t seed) {
  if (resamples < 100) throw InvalidInput("bootstrap needs at least 100 resamples");
  check_records(plan, records);
  BootstrapResult out;
  out.resamples = resamples;
  double sum = 0.0;
  double sum2 = 0.0;
  int ok = 0;
  std::string last_error;
  std::vector<CountsRecord> copy(records.begin(), records.end());
  for (int r = 0; r < resamples; ++r) {
    Philox4x64 rng(seed, static_cast<std::uint64_t>(r));
    for (std::size_t p = 0; p < records.size(); ++p) {
      for (std::size_t c = 0; c < records[p].counts.size(); ++c) {
        copy[p].counts[c] = poisson(rng, static_cast<double>(records[p].counts[c]));
      }
    }
    try {
      const auto pts = scan_fit_points(cfg, plan, copy, options, nullptr);
      const FitResult f = fit_global(pts, options.fit);
      const double s = fit_witness(f, options.settings, options.reference).S;
      sum += s;
      sum2 += s * s;
      ++ok;
    } catch (const Error& e) {
      ++out.failures;
      last_error = e.what();
    }
  }
  if (out.failures > kMaxBootstrapFailureFraction * resamples) {
    std::ostringstream diag;
    diag << "failures=" << out.failures << " resamples=" << resamples << " last_error=" << last_error;
    throw FitError("too many bootstrap refits failed", diag.str());
  }
  out.mean_S = sum / ok;
  out.sigma_S = ok > 1 ? std::sqrt(std::max(0.0, (sum2 - ok * out.mean_S * out.mean_S) / (ok - 1))) : 0.0;
  return out;
}

}  // namespace mieze
