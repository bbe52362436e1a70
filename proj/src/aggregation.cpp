#include "isea/aggregation.hpp"

#include <cmath>
#include <numbers>

#include "isea/errors.hpp"

namespace isea {

namespace {

void require_inputs(double prior_var, std::span<const double> sensing_vars) {
  if (!(prior_var > 0.0) || !std::isfinite(prior_var)) {
    throw ValidationError("prior variance must be finite and positive");
  }
  if (sensing_vars.empty()) throw ValidationError("need at least one sensing variance");
  for (double v : sensing_vars) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("sensing variances must be finite and positive");
    }
  }
}

double gaussian_entropy(double variance) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

}  // namespace

double cond_entropy_ml(double prior_var, std::span<const double> sensing_vars) {
  require_inputs(prior_var, sensing_vars);
  double total = 0.0;
  for (double v : sensing_vars) total += v;
  const double k = static_cast<double>(sensing_vars.size());
  return gaussian_entropy(1.0 / (1.0 / prior_var + k * k / total));
}

double cond_entropy_mmse(double prior_var, std::span<const double> sensing_vars) {
  require_inputs(prior_var, sensing_vars);
  double sum_rho = 0.0;
  double weighted = 0.0;
  for (double v : sensing_vars) {
    const double rho = prior_var / (prior_var + v);
    sum_rho += rho;
    weighted += rho * rho * v;
  }
  return gaussian_entropy(1.0 / (1.0 / prior_var + sum_rho * sum_rho / weighted));
}

EntropyReport entropy_report(double prior_var, std::span<const double> sensing_vars) {
  EntropyReport report;
  report.h_ml = cond_entropy_ml(prior_var, sensing_vars);
  report.h_mmse = cond_entropy_mmse(prior_var, sensing_vars);
  report.shrinkage.reserve(sensing_vars.size());
  for (double v : sensing_vars) report.shrinkage.push_back(prior_var / (prior_var + v));
  return report;
}

}  // namespace isea
