#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "mieze/synth.hpp"

namespace mieze {

// y = A + B cos(x + phi) with B >= 0 and phi in (-pi, pi].
struct FitResult {
  double A = 0.0;
  double B = 0.0;
  double phi = 0.0;
  double contrast = 0.0;  // B / A
  // Covariance of (A, B, phi); singular in phi when B = 0.
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  // Covariance of (a, b, c) in a + b cos x - c sin x, where a = A,
  // b = B cos phi, c = B sin phi.
  Eigen::Matrix3d linear_covariance = Eigen::Matrix3d::Zero();
  double chi_square = 0.0;
  int dof = 0;
  int iterations = 0;

  double contrast_sigma() const;
  double operator()(double x) const;
};

struct FitPoint {
  double x = 0.0;      // rad
  double y = 0.0;
  double sigma = 1.0;  // > 0
};

struct FitOptions {
  int phase_starts = 16;
  int max_iterations = 200;
  double tolerance = 1e-10;  // relative parameter change
};

// Weighted least squares. Throws FitError on degenerate input or when the
// iteration limit is reached.
FitResult fit_cosine(std::span<const FitPoint> points, const FitOptions& options = {});

// counts(t_i) = A (1 + C cos(w_m t_i + phi)) with w_m t_i = 2 pi i / n and
// sigma^2 = max(counts, 1). A and B are in counts.
FitResult fit_time_series(std::span<const std::uint64_t> counts, const FitOptions& options = {});
FitResult fit_time_series(const CountsRecord& record, const FitOptions& options = {});

// Fit over alpha + gamma. Needs at least 4 points whose phases, taken modulo
// 2 pi, leave no gap of pi or more.
FitResult fit_global(std::span<const FitPoint> points, const FitOptions& options = {});

// Angular extent of the smallest arc holding every x modulo 2 pi.
double phase_coverage(std::span<const FitPoint> points);

}  // namespace mieze
