#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isea/aircomp.hpp"
#include "isea/gm_prior.hpp"
#include "isea/sensing.hpp"
#include "isea/transceiver.hpp"

namespace isea {

enum class SweepVariable { kCommSnr, kSensingSnr, kDevices, kSubcarriers };

SweepVariable parse_sweep_variable(std::string_view name);
std::string_view sweep_variable_name(SweepVariable variable) noexcept;

/// How the per-device estimation variance fed to the transceiver solvers is
/// calibrated.
enum class VarianceModel {
  /// Pooled within-class variance of the estimated feature.
  kWithinClass,
  /// Mean of the estimator's own posterior variance.
  kPosterior,
};

VarianceModel parse_variance_model(std::string_view name);
std::string_view variance_model_name(VarianceModel model) noexcept;

/// Pseudo-solver: noise-free arithmetic-mean aggregation.
inline constexpr std::string_view kIdealSolver = "ideal";

struct ExperimentConfig {
  GaussianMixturePrior prior = make_synthetic_prior(5, 4, 4.0, 1);
  std::size_t num_devices = 3;
  std::size_t num_subcarriers = 4;
  Scheme scheme = Scheme::kFdm;
  EstimatorKind estimator = EstimatorKind::kRwb;
  /// Estimators compared by estimator-sweep.
  std::vector<EstimatorKind> estimators{EstimatorKind::kMl, EstimatorKind::kRwb,
                                        EstimatorKind::kMmse};
  /// Solver tags, plus kIdealSolver.
  std::vector<std::string> solvers{"fdm_mse", "fdm_md", "equal", "channel_inversion",
                                   std::string(kIdealSolver)};

  double sensing_snr_db = 10.0;
  /// Explicit sigma_k^2; overrides sensing_snr_db when non-empty.
  Vector sensing_vars;
  /// Relative spread of the random sensing variances: weights ~ U[1 - s, 1 + s].
  double sensing_spread = 0.5;
  double comm_snr_db = 10.0;
  double noise_var = 0.1;
  double channel_scale = 1.0;

  SweepVariable sweep = SweepVariable::kCommSnr;
  Vector sweep_values{10.0};

  std::size_t trials = 1000;
  std::size_t samples_per_trial = 100;
  std::uint64_t seed = 1;
  std::size_t calibration_samples = 10000;
  VarianceModel variance_model = VarianceModel::kWithinClass;
  DualOptions dual;
  /// Fraction of excluded (non-convergent) trials tolerated per solver.
  double max_excluded_fraction = 0.01;

  /// entropy-report: prior variance and either explicit tuples or a random count.
  double entropy_prior_var = 1.0;
  std::vector<Vector> entropy_tuples;
  std::size_t entropy_random_cases = 1000;

  std::filesystem::path output_dir = "out";
};

/// Parses a JSON config. Relative prior file paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
/// Reads and parses a config file. Throws IoError naming the path if unreadable.
ExperimentConfig load_config(const std::filesystem::path& path);

void validate(const ExperimentConfig& config);

/// 10^(snr/10) * noise_var.
double budget_for_snr(double comm_snr_db, double noise_var);

}  // namespace isea
