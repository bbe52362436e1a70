#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isea/linalg.hpp"

namespace isea {

/// Zero-based class index. CSV files written by this library use 1-based labels.
using ClassIndex = std::size_t;
using ClassPair = std::pair<ClassIndex, ClassIndex>;

/// Gaussian-mixture feature prior with one mean per class and a covariance
/// diag(variances) shared by every class. Immutable once constructed.
class GaussianMixturePrior {
 public:
  /// `means` is L x M, `variances` has M strictly positive entries and
  /// `mixing` has L nonnegative entries summing to one within 1e-12.
  GaussianMixturePrior(Matrix means, Vector variances, Vector mixing);

  std::size_t num_classes() const noexcept { return means_.rows(); }
  std::size_t feature_dim() const noexcept { return means_.cols(); }

  const Matrix& means() const noexcept { return means_; }
  std::span<const double> mean(ClassIndex label) const { return means_.row(label); }
  const Vector& variances() const noexcept { return variances_; }
  const Vector& mixing() const noexcept { return mixing_; }

  /// (1/M) tr(Sigma).
  double mean_variance() const;

 private:
  Matrix means_;
  Vector variances_;
  Vector mixing_;
};

struct LabeledFeature {
  ClassIndex label = 0;
  Vector x;
};

/// Per-dimension minimum squared mean gap over class pairs.
struct DiscriminativePrior {
  Vector delta;
  /// Class pair attaining delta[m], one per dimension.
  std::vector<ClassPair> min_pair;
};

struct ClassPairDistance {
  double distance = 0.0;
  ClassPair pair;
};

/// Draws `count` labeled features: label ~ mixing, x | label ~ N(mu_label, diag(variances)).
std::vector<LabeledFeature> sample(const GaussianMixturePrior& prior, std::size_t count,
                                   std::uint64_t seed);

/// Posterior class probabilities of an observation x + d with d ~ N(0, sensing_var I),
/// evaluated with log-sum-exp normalization.
Vector responsibilities(const GaussianMixturePrior& prior, std::span<const double> observation,
                        double sensing_var);

/// Mahalanobis distance between two class means under the shared covariance.
/// Equals the symmetric KL divergence between the two class conditionals.
double pairwise_md(const GaussianMixturePrior& prior, ClassIndex l, ClassIndex l2);

/// Smallest pairwise_md over unordered pairs. Ties go to the lexicographically
/// smallest pair. Throws ValidationError when L < 2.
ClassPairDistance min_md(const GaussianMixturePrior& prior);

DiscriminativePrior discriminative_prior(const GaussianMixturePrior& prior);

/// log pi_l + log N(x | mu_l, Sigma) for every class (common constants included).
Vector class_log_scores(const GaussianMixturePrior& prior, std::span<const double> x);

/// Index of the largest score; the smallest index wins ties.
ClassIndex argmax_class(std::span<const double> scores);

/// MAP-optimal class for a clean feature vector.
ClassIndex map_classify(const GaussianMixturePrior& prior, std::span<const double> x);

inline constexpr double kVarianceFloor = 1e-9;

/// Per-class sample means, pooled within-class variances (floored at
/// `variance_floor`) and empirical class frequencies.
GaussianMixturePrior fit_from_samples(std::span<const LabeledFeature> samples,
                                      std::size_t num_classes,
                                      double variance_floor = kVarianceFloor);

/// Synthetic prior: unit variances, uniform mixing, means drawn from a seeded
/// standard Gaussian and rescaled so that min_md equals `target_min_md`.
GaussianMixturePrior make_synthetic_prior(std::size_t num_classes, std::size_t feature_dim,
                                          double target_min_md, std::uint64_t seed);

// Structured-text (JSON) form: {"L", "M", "means", "variances", "mixing"}.
std::string prior_to_json(const GaussianMixturePrior& prior);
GaussianMixturePrior prior_from_json(const std::string& text);

/// CSV rows `label,x_1..x_M` with 1-based labels.
void write_samples_csv(std::ostream& out, std::span<const LabeledFeature> samples);
/// Parses write_samples_csv output back into 0-based labels.
std::vector<LabeledFeature> read_samples_csv(std::istream& in);

}  // namespace isea
