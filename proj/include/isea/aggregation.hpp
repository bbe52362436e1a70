#pragma once

#include <span>

#include "isea/linalg.hpp"

namespace isea {

/// Conditional entropies (nats) of the noise-free aggregated feature given
/// the ground truth, for one feature dimension.
struct EntropyReport {
  double h_ml = 0.0;
  double h_mmse = 0.0;
  /// rho_k = prior_var / (prior_var + sigma_k^2).
  Vector shrinkage;
};

double cond_entropy_ml(double prior_var, std::span<const double> sensing_vars);
double cond_entropy_mmse(double prior_var, std::span<const double> sensing_vars);
EntropyReport entropy_report(double prior_var, std::span<const double> sensing_vars);

}  // namespace isea
