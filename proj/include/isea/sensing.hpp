#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isea/gm_prior.hpp"
#include "isea/linalg.hpp"

namespace isea {

enum class EstimatorKind { kMl, kMmse, kRwb };

/// Parses "ml", "mmse" or "rwb". Throws ValidationError otherwise.
EstimatorKind parse_estimator(std::string_view name);
std::string_view estimator_name(EstimatorKind kind) noexcept;

struct DeviceProfile {
  /// sigma_k^2. Zero is accepted and means a noiseless sensor.
  double sensing_var = 1.0;
  double power_budget = 1.0;
  /// nu_{k,n}^2 per slot or subcarrier.
  Vector feature_second_moments;
};

void validate(const DeviceProfile& profile);

struct NoisyObservation {
  std::size_t device = 0;
  Vector x_tilde;
};

struct EstimatedFeature {
  std::size_t device = 0;
  Vector x_hat;
  EstimatorKind estimator = EstimatorKind::kMl;
  Vector posterior_var;
};

/// x_tilde = x + d with d ~ N(0, sensing_var I).
NoisyObservation observe(const LabeledFeature& x, const DeviceProfile& profile,
                         std::size_t device, std::uint64_t seed);

EstimatedFeature ml_estimate(const NoisyObservation& obs, const DeviceProfile& profile);

/// Exact MMSE estimate given the true class. Only usable as a lower bound:
/// a real device never knows the label.
EstimatedFeature mmse_estimate(const NoisyObservation& obs, const DeviceProfile& profile,
                               const GaussianMixturePrior& prior, ClassIndex true_label);

/// Responsibility-weighted Bayesian estimate. `responsibility_noise_var`
/// overrides the sensing variance used only when computing responsibilities.
EstimatedFeature rwb_estimate(const NoisyObservation& obs, const DeviceProfile& profile,
                              const GaussianMixturePrior& prior,
                              std::optional<double> responsibility_noise_var = std::nullopt);

/// Dispatches on `kind`. `true_label` is read only by the MMSE path.
EstimatedFeature estimate(EstimatorKind kind, const NoisyObservation& obs,
                          const DeviceProfile& profile, const GaussianMixturePrior& prior,
                          ClassIndex true_label);

/// Closed-form per-element MSE. The RWB value is conditional on the
/// responsibilities of one observation and throws ValidationError without them.
Vector analytic_mse(EstimatorKind kind, const GaussianMixturePrior& prior,
                    const DeviceProfile& profile,
                    std::optional<std::span<const double>> responsibilities = std::nullopt);

/// Average sensing SNR in dB over devices.
double sensing_snr(const GaussianMixturePrior& prior, std::span<const DeviceProfile> profiles);

/// Sensing variances sigma_k^2 = mean_var / (rho * g_k) for rho = 10^(snr_db/10),
/// where `spread` g_k are positive weights rescaled to mean one. Every
/// returned tuple has sensing_snr exactly `snr_db`.
Vector sensing_vars_for_snr(double mean_prior_var, double snr_db, std::span<const double> spread);

}  // namespace isea
