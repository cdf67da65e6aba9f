#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mieze/beamline.hpp"
#include "mieze/cosine_fit.hpp"
#include "mieze/quantum_core.hpp"
#include "mieze/synth.hpp"

namespace mieze {

enum class Classification { classical, quantum, unphysical };

// Slack on the 2 and 2 sqrt(2) thresholds for rounding in sums of cosines.
inline constexpr double kClassificationTolerance = 1e-12;

// classical iff |S| <= 2, quantum iff 2 < |S| <= 2 sqrt(2).
Classification classify(double s);
std::string_view to_string(Classification c);

// Origin of the analyzer angles. `fitted` measures them from the fitted phase
// phi0 of the global cosine; `absolute` uses the scan phase alpha + gamma
// literally.
enum class PhaseReference { fitted, absolute };

using Grid2 = std::array<std::array<double, 2>, 2>;

struct ExpectationGrid {
  Grid2 value{};
  Grid2 sigma{};
  // dE/d(a, b, c) of the linear fit parametrization, per cell.
  std::array<std::array<Eigen::Vector3d, 2>, 2> gradient{};
};

// E(alpha_i, gamma_j) = C cos(alpha_i + gamma_j [+ phi0]) with first-order
// uncertainties from the fit covariance.
ExpectationGrid expectation_grid(const FitResult& fit, const WitnessSettings& settings,
                                 PhaseReference reference = PhaseReference::fitted);

struct WitnessResult {
  Grid2 E{};
  Grid2 sigma_E{};
  double S = 0.0;
  double sigma_S = 0.0;
  Classification classification = Classification::classical;
};

// S from four values; sigma_S adds the four sigmas in quadrature.
WitnessResult witness(const Grid2& E, const Grid2& sigma);

// S with sigma_S from the full fit covariance.
WitnessResult witness(const ExpectationGrid& grid, const Eigen::Matrix3d& linear_covariance);

WitnessResult fit_witness(const FitResult& fit, const WitnessSettings& settings,
                          PhaseReference reference = PhaseReference::fitted);

// 2 sqrt(2) C. Throws InvalidInput unless C lies in [0, 1].
double witness_from_contrast(double contrast);

enum class AnalysisPath {
  single_channel,  // one time channel per scan point
  cosine_fits,     // per-point time fits evaluated at the reference channel
};

struct AnalysisOptions {
  AnalysisPath path = AnalysisPath::single_channel;
  int reference_channel = 5;
  PhaseReference reference = PhaseReference::fitted;
  WitnessSettings settings = optimal_settings();
  FitOptions fit;
};

// Scan-point lookup used by the count-ratio estimator.
struct CountCell {
  std::size_t record = 0;      // index into the records
  double requested_phase = 0;  // alpha + gamma + (k + l) pi
  double realized_phase = 0;   // scan phase of the chosen point
  std::uint64_t counts = 0;
};

struct CountWitness {
  WitnessResult result;
  std::array<std::array<std::array<std::array<CountCell, 2>, 2>, 2>, 2> cells{};  // [i][j][k][l]
};

struct WitnessAnalysis {
  std::vector<FitPoint> points;
  FitResult global_fit;
  WitnessResult witness;
  CountWitness count_witness;
  std::vector<FitResult> time_fits;  // cosine_fits path only
};

// Fit-based and count-based witness from a scan. `plan` supplies the energy
// axis, detuning time, channel count and N0.
WitnessAnalysis analyze_scan(const BeamlineConfig& cfg, const ScanPlan& plan,
                             std::span<const CountsRecord> records, const AnalysisOptions& options = {});

// Count-ratio witness: each N(alpha_i + k pi, gamma_j + l pi) is read at the
// reference channel of the scan point whose phase is nearest on the circle,
// ties going to the smaller |current|.
CountWitness count_witness(const BeamlineConfig& cfg, const ScanPlan& plan, std::span<const CountsRecord> records,
                           const AnalysisOptions& options, double phase_origin);

struct BootstrapResult {
  double sigma_S = 0.0;
  double mean_S = 0.0;
  int resamples = 0;
  int failures = 0;
};

inline constexpr double kMaxBootstrapFailureFraction = 0.05;

// Poisson-resampled refits of the fit-based witness. Resample r draws from
// stream (seed, r). Throws FitError when more than 5% of refits fail.
BootstrapResult bootstrap_uncertainty(const BeamlineConfig& cfg, const ScanPlan& plan,
                                      std::span<const CountsRecord> records, const AnalysisOptions& options,
                                      int resamples, std::uint64_t seed);

}  // namespace mieze
