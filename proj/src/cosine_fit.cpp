#include "mieze/cosine_fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "mieze/constants.hpp"
#include "mieze/errors.hpp"

namespace mieze {

namespace {

using Vec3 = Eigen::Vector3d;

double wrap_phase(double phi) {
  double r = std::remainder(phi, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

double chi_square(std::span<const FitPoint> pts, const Vec3& p) {
  double chi2 = 0.0;
  for (const auto& q : pts) {
    const double r = (q.y - p[0] - p[1] * std::cos(q.x + p[2])) / q.sigma;
    chi2 += r * r;
  }
  return chi2;
}

// Best (A, B) at fixed phi.
Vec3 profile_start(std::span<const FitPoint> pts, double phi) {
  Eigen::Matrix2d n = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (const auto& q : pts) {
    const double w = 1.0 / (q.sigma * q.sigma);
    const Eigen::Vector2d row(1.0, std::cos(q.x + phi));
    n += w * row * row.transpose();
    rhs += w * q.y * row;
  }
  const Eigen::Vector2d ab = n.completeOrthogonalDecomposition().solve(rhs);
  return {ab[0], ab[1], phi};
}

Eigen::Matrix3d pseudo_inverse(const Eigen::Matrix3d& m) {
  return m.completeOrthogonalDecomposition().pseudoInverse();
}

void validate_points(std::span<const FitPoint> pts) {
  if (pts.size() < 4) throw FitError("need at least 4 points", "points=" + std::to_string(pts.size()));
  for (const auto& q : pts) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.sigma) || q.sigma <= 0.0) {
      throw InvalidInput("fit points need finite x, y and a positive sigma");
    }
  }
}

}  // namespace

double FitResult::contrast_sigma() const {
  if (!(A != 0.0)) return 0.0;
  const Vec3 g(-contrast / A, std::cos(phi) / A, std::sin(phi) / A);
  return std::sqrt(std::max(0.0, g.dot(linear_covariance * g)));
}

double FitResult::operator()(double x) const { return A + B * std::cos(x + phi); }

FitResult fit_cosine(std::span<const FitPoint> pts, const FitOptions& options) {
  validate_points(pts);
  if (options.phase_starts < 1 || options.max_iterations < 1) throw InvalidInput("invalid fit options");

  Vec3 p = profile_start(pts, 0.0);
  double chi2 = chi_square(pts, p);
  for (int s = 1; s < options.phase_starts; ++s) {
    const Vec3 trial = profile_start(pts, kTwoPi * s / options.phase_starts);
    const double c = chi_square(pts, trial);
    if (c < chi2) {
      chi2 = c;
      p = trial;
    }
  }

  // Levenberg-Marquardt on (A, B, phi).
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = chi2 == 0.0;
  while (!converged && iterations < options.max_iterations) {
    ++iterations;
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Vec3 jtr = Vec3::Zero();
    for (const auto& q : pts) {
      const double c = std::cos(q.x + p[2]);
      const double s = std::sin(q.x + p[2]);
      const Vec3 j(1.0 / q.sigma, c / q.sigma, -p[1] * s / q.sigma);
      const double r = (q.y - p[0] - p[1] * c) / q.sigma;
      jtj += j * j.transpose();
      jtr += j * r;
    }
    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix3d damped = jtj;
      for (int i = 0; i < 3; ++i) damped(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      const Vec3 step = damped.completeOrthogonalDecomposition().solve(jtr);
      const Vec3 trial = p + step;
      const double c = chi_square(pts, trial);
      if (std::isfinite(c) && c <= chi2) {
        const double scale = std::max({std::abs(p[0]), std::abs(p[1]), 1e-300});
        const bool small = std::abs(step[0]) <= options.tolerance * scale &&
                           std::abs(step[1]) <= options.tolerance * scale &&
                           std::abs(step[2]) <= options.tolerance * std::max(1.0, std::abs(p[2]));
        p = trial;
        chi2 = c;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        converged = small || chi2 == 0.0;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left: stationary to machine precision.
          accepted = true;
          converged = true;
        }
      }
    }
  }
  if (!converged) {
    std::ostringstream diag;
    diag << "iterations=" << iterations << " chi2=" << chi2 << " lambda=" << lambda << " A=" << p[0]
         << " B=" << p[1] << " phi=" << p[2];
    throw FitError("cosine fit did not converge", diag.str());
  }

  if (p[1] < 0.0) {
    p[1] = -p[1];
    p[2] += kPi;
  }
  p[2] = wrap_phase(p[2]);

  FitResult r;
  r.A = p[0];
  r.B = p[1];
  r.phi = p[2];
  r.contrast = r.A != 0.0 ? r.B / r.A : 0.0;
  r.chi_square = chi2;
  r.dof = static_cast<int>(pts.size()) - 3;
  r.iterations = iterations;

  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
  for (const auto& q : pts) {
    const double c = std::cos(q.x + r.phi);
    const double s = std::sin(q.x + r.phi);
    const Vec3 j(1.0 / q.sigma, c / q.sigma, -r.B * s / q.sigma);
    const Vec3 x(1.0 / q.sigma, std::cos(q.x) / q.sigma, -std::sin(q.x) / q.sigma);
    jtj += j * j.transpose();
    xtx += x * x.transpose();
  }
  r.covariance = pseudo_inverse(jtj);
  r.linear_covariance = pseudo_inverse(xtx);
  return r;
}

FitResult fit_time_series(std::span<const std::uint64_t> counts, const FitOptions& options) {
  const int n = static_cast<int>(counts.size());
  if (n < 4) throw FitError("need at least 4 time channels", "channels=" + std::to_string(n));
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw FitError("all time channels are empty", "channels=" + std::to_string(n));
  std::vector<FitPoint> pts;
  pts.reserve(counts.size());
  for (int i = 0; i < n; ++i) {
    const double y = static_cast<double>(counts[static_cast<std::size_t>(i)]);
    pts.push_back({channel_phase(i, n), y, std::sqrt(std::max(y, 1.0))});
  }
  return fit_cosine(pts, options);
}

FitResult fit_time_series(const CountsRecord& record, const FitOptions& options) {
  return fit_time_series(std::span<const std::uint64_t>(record.counts), options);
}

double phase_coverage(std::span<const FitPoint> points) {
  if (points.empty()) return 0.0;
  std::vector<double> xs;
  xs.reserve(points.size());
  for (const auto& q : points) {
    double r = std::fmod(q.x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    xs.push_back(r);
  }
  std::sort(xs.begin(), xs.end());
  double gap = xs.front() + kTwoPi - xs.back();
  for (std::size_t i = 1; i < xs.size(); ++i) gap = std::max(gap, xs[i] - xs[i - 1]);
  return kTwoPi - gap;
}

FitResult fit_global(std::span<const FitPoint> points, const FitOptions& options) {
  validate_points(points);
  const double coverage = phase_coverage(points);
  if (!(coverage > kPi)) {
    throw FitError("insufficient phase coverage for a cosine fit",
                   "coverage_rad=" + std::to_string(coverage) + " required>pi");
  }
  return fit_cosine(points, options);
}

}  // namespace mieze
