#include "isea/sensing.hpp"

#include <cmath>
#include <numeric>

#include "isea/errors.hpp"
#include "isea/random.hpp"

namespace isea {

namespace {

void require_obs(const GaussianMixturePrior& prior, const NoisyObservation& obs) {
  if (obs.x_tilde.size() != prior.feature_dim()) {
    throw ValidationError("observation has " + std::to_string(obs.x_tilde.size()) +
                          " entries, prior expects " + std::to_string(prior.feature_dim()));
  }
  if (!all_finite(obs.x_tilde)) throw ValidationError("observation contains non-finite values");
}

// Posterior mean of x_m given class l: shrink toward mu_{l,m}.
double shrink(double prior_var, double sensing_var, double x_tilde, double mean) {
  return (prior_var * x_tilde + sensing_var * mean) / (prior_var + sensing_var);
}

double within_class_var(double prior_var, double sensing_var) {
  return prior_var * sensing_var / (prior_var + sensing_var);
}

}  // namespace

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "ml") return EstimatorKind::kMl;
  if (name == "mmse") return EstimatorKind::kMmse;
  if (name == "rwb") return EstimatorKind::kRwb;
  throw ValidationError("unknown estimator '" + std::string(name) + "' (expected ml, mmse or rwb)");
}

std::string_view estimator_name(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::kMl: return "ml";
    case EstimatorKind::kMmse: return "mmse";
    case EstimatorKind::kRwb: return "rwb";
  }
  return "?";
}

void validate(const DeviceProfile& profile) {
  if (!std::isfinite(profile.sensing_var) || profile.sensing_var < 0.0) {
    throw ValidationError("sensing variance must be finite and nonnegative");
  }
  if (!std::isfinite(profile.power_budget) || profile.power_budget <= 0.0) {
    throw ValidationError("power budget must be finite and positive");
  }
  for (double v : profile.feature_second_moments) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError("feature second moments must be finite and positive");
    }
  }
}

NoisyObservation observe(const LabeledFeature& x, const DeviceProfile& profile,
                         std::size_t device, std::uint64_t seed) {
  validate(profile);
  if (!all_finite(x.x)) throw ValidationError("feature contains non-finite values");
  NoisyObservation obs{device, x.x};
  if (profile.sensing_var == 0.0) return obs;
  StreamRng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(profile.sensing_var));
  for (double& v : obs.x_tilde) v += normal(rng);
  return obs;
}

EstimatedFeature ml_estimate(const NoisyObservation& obs, const DeviceProfile& profile) {
  validate(profile);
  return {obs.device, obs.x_tilde, EstimatorKind::kMl,
          Vector(obs.x_tilde.size(), profile.sensing_var)};
}

EstimatedFeature mmse_estimate(const NoisyObservation& obs, const DeviceProfile& profile,
                               const GaussianMixturePrior& prior, ClassIndex true_label) {
  validate(profile);
  require_obs(prior, obs);
  if (true_label >= prior.num_classes()) {
    throw ValidationError("true label " + std::to_string(true_label) + " out of range");
  }
  const auto mu = prior.mean(true_label);
  const std::size_t dim = prior.feature_dim();
  EstimatedFeature out{obs.device, Vector(dim), EstimatorKind::kMmse, Vector(dim)};
  for (std::size_t m = 0; m < dim; ++m) {
    const double var = prior.variances()[m];
    out.x_hat[m] = shrink(var, profile.sensing_var, obs.x_tilde[m], mu[m]);
    out.posterior_var[m] = within_class_var(var, profile.sensing_var);
  }
  return out;
}

EstimatedFeature rwb_estimate(const NoisyObservation& obs, const DeviceProfile& profile,
                              const GaussianMixturePrior& prior,
                              std::optional<double> responsibility_noise_var) {
  validate(profile);
  require_obs(prior, obs);
  const double theta_var = responsibility_noise_var.value_or(profile.sensing_var);
  const Vector theta = responsibilities(prior, obs.x_tilde, theta_var);
  const std::size_t dim = prior.feature_dim();
  const std::size_t classes = prior.num_classes();
  EstimatedFeature out{obs.device, Vector(dim), EstimatorKind::kRwb, Vector(dim)};
  Vector shrunk(classes);
  for (std::size_t m = 0; m < dim; ++m) {
    const double var = prior.variances()[m];
    double mix_mean = 0.0;
    for (ClassIndex l = 0; l < classes; ++l) {
      shrunk[l] = shrink(var, profile.sensing_var, obs.x_tilde[m], prior.means()(l, m));
      mix_mean += theta[l] * shrunk[l];
    }
    double spread = 0.0;
    for (ClassIndex l = 0; l < classes; ++l) {
      const double diff = shrunk[l] - mix_mean;
      spread += theta[l] * diff * diff;
    }
    out.x_hat[m] = mix_mean;
    out.posterior_var[m] = within_class_var(var, profile.sensing_var) + spread;
  }
  return out;
}

EstimatedFeature estimate(EstimatorKind kind, const NoisyObservation& obs,
                          const DeviceProfile& profile, const GaussianMixturePrior& prior,
                          ClassIndex true_label) {
  switch (kind) {
    case EstimatorKind::kMl: return ml_estimate(obs, profile);
    case EstimatorKind::kMmse: return mmse_estimate(obs, profile, prior, true_label);
    case EstimatorKind::kRwb: return rwb_estimate(obs, profile, prior);
  }
  throw ValidationError("unknown estimator kind");
}

Vector analytic_mse(EstimatorKind kind, const GaussianMixturePrior& prior,
                    const DeviceProfile& profile,
                    std::optional<std::span<const double>> responsibilities) {
  validate(profile);
  const std::size_t dim = prior.feature_dim();
  const double s2 = profile.sensing_var;
  Vector out(dim);
  if (kind == EstimatorKind::kMl) {
    std::fill(out.begin(), out.end(), s2);
    return out;
  }
  for (std::size_t m = 0; m < dim; ++m) out[m] = within_class_var(prior.variances()[m], s2);
  if (kind == EstimatorKind::kMmse) return out;

  if (!responsibilities) {
    throw ValidationError("RWB analytic MSE needs the responsibilities of an observation");
  }
  const auto theta = *responsibilities;
  if (theta.size() != prior.num_classes()) {
    throw ValidationError("responsibility vector has wrong length");
  }
  // The shrunk class means differ from their mixture mean only through the
  // class means, scaled by sigma_k^2 / (sigma_m^2 + sigma_k^2).
  for (std::size_t m = 0; m < dim; ++m) {
    double mix = 0.0;
    for (ClassIndex l = 0; l < theta.size(); ++l) mix += theta[l] * prior.means()(l, m);
    const double gain = s2 / (prior.variances()[m] + s2);
    double spread = 0.0;
    for (ClassIndex l = 0; l < theta.size(); ++l) {
      const double diff = gain * (prior.means()(l, m) - mix);
      spread += theta[l] * diff * diff;
    }
    out[m] += spread;
  }
  return out;
}

double sensing_snr(const GaussianMixturePrior& prior, std::span<const DeviceProfile> profiles) {
  if (profiles.empty()) throw ValidationError("sensing SNR needs at least one device");
  const double signal = prior.mean_variance();
  double acc = 0.0;
  for (const auto& p : profiles) {
    validate(p);
    acc += signal / p.sensing_var;
  }
  return 10.0 * std::log10(acc / static_cast<double>(profiles.size()));
}

Vector sensing_vars_for_snr(double mean_prior_var, double snr_db, std::span<const double> spread) {
  if (spread.empty()) throw ValidationError("need at least one device");
  if (!(mean_prior_var > 0.0) || !std::isfinite(snr_db)) {
    throw ValidationError("prior variance must be positive and SNR finite");
  }
  const double total = std::accumulate(spread.begin(), spread.end(), 0.0);
  for (double g : spread) {
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("spread weights must be positive");
  }
  const double mean = total / static_cast<double>(spread.size());
  const double rho = std::pow(10.0, snr_db / 10.0);
  Vector out(spread.size());
  for (std::size_t k = 0; k < spread.size(); ++k) {
    out[k] = mean_prior_var / (rho * spread[k] / mean);
  }
  return out;
}

}  // namespace isea
