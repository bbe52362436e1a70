#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "isea/config.hpp"
#include "isea/export.hpp"

namespace isea {

/// Offline statistics of one estimator at one sensing variance.
struct Calibration {
  Vector est_var;        // sigma_hat_m^2
  Vector second_moment;  // nu_m^2
};

/// Estimates sigma_hat^2 and nu^2 for `kind` at `sensing_var` from `samples`
/// draws. Deterministic in (seed, sensing_var).
Calibration calibrate(const GaussianMixturePrior& prior, EstimatorKind kind, double sensing_var,
                      std::size_t samples, VarianceModel model, std::uint64_t seed);

/// Everything fixed at one sweep point.
struct PointSetup {
  double sweep_value = 0.0;
  std::size_t num_devices = 0;
  /// Slots (TDM) or subcarriers (FDM) on the channel; the first M carry features.
  std::size_t num_columns = 0;
  double comm_snr_db = 0.0;
  double sensing_snr_db = 0.0;
  Vector sensing_vars;
  std::vector<DeviceProfile> profiles;
  Matrix est_vars;  // K x M
  Matrix moments;   // K x M
  Vector delta;     // M
  std::uint64_t seed = 0;
};

PointSetup prepare_point(const ExperimentConfig& config, double sweep_value,
                         std::size_t point_index);

struct SolverTrial {
  std::size_t correct = 0;
  /// Flattened L x L confusion counts.
  std::vector<std::size_t> confusion;
  double mse = 0.0;
  double md = 0.0;
  bool excluded = false;
};

/// One channel realization and a batch of samples_per_trial test samples,
/// evaluated for every configured solver with shared randomness.
struct TrialRecord {
  std::vector<SolverTrial> solvers;
};

TrialRecord run_trial(const ExperimentConfig& config, const PointSetup& setup,
                      std::uint64_t trial_seed);

struct SweepResult {
  /// One record list per solver tag, in config order.
  std::map<std::string, std::vector<MetricsRecord>> records;
  std::size_t total_trials = 0;
  /// Largest per-solver excluded fraction over all points.
  double worst_excluded_fraction = 0.0;
};

/// Worker threads from the ISEA_THREADS environment variable (default 1).
std::size_t thread_count();

/// Runs `count` independent jobs on thread_count() workers. Jobs must write
/// only to their own slot of any shared output.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job);

SweepResult sweep(const ExperimentConfig& config);

/// Sensing-level comparison with noise-free aggregation.
struct EstimatorPoint {
  double sensing_snr_db = 0.0;
  EstimatorKind estimator = EstimatorKind::kMl;
  double empirical_mse = 0.0;
  double standard_error = 0.0;
  /// Closed form for ML/MMSE; Monte Carlo mean of the per-observation value for RWB.
  double analytic_mse = 0.0;
  MetricsRecord accuracy;
};

std::vector<EstimatorPoint> estimator_sweep(const ExperimentConfig& config);

/// Mean analytic MSE and MD of one solver at one sweep point.
struct DesignPoint {
  double sweep_value = 0.0;
  std::string solver;
  double mse_mean = 0.0;
  double md_mean = 0.0;
  std::size_t excluded_trials = 0;
};

/// Channel-only Monte Carlo: per sweep point and trial, one channel draw
/// shared by every solver in `solvers` under `config.scheme`.
std::vector<DesignPoint> design_compare(const ExperimentConfig& config,
                                        const std::vector<std::string>& solvers);

}  // namespace isea
