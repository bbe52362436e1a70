#include "isea/gm_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "isea/errors.hpp"
#include "isea/export.hpp"
#include "isea/random.hpp"

namespace isea {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  if (!all_finite(values)) throw ValidationError(std::string(what) + " contains non-finite values");
}

void require_class(const GaussianMixturePrior& prior, ClassIndex label) {
  if (label >= prior.num_classes()) {
    throw ValidationError("class index " + std::to_string(label) + " out of range for " +
                          std::to_string(prior.num_classes()) + " classes");
  }
}

void require_dim(const GaussianMixturePrior& prior, std::span<const double> x) {
  if (x.size() != prior.feature_dim()) {
    throw ValidationError("feature vector has " + std::to_string(x.size()) +
                          " entries, prior expects " + std::to_string(prior.feature_dim()));
  }
}

}  // namespace

GaussianMixturePrior::GaussianMixturePrior(Matrix means, Vector variances, Vector mixing)
    : means_(std::move(means)), variances_(std::move(variances)), mixing_(std::move(mixing)) {
  if (means_.rows() == 0 || means_.cols() == 0) {
    throw ValidationError("prior needs at least one class and one feature dimension");
  }
  if (variances_.size() != means_.cols()) {
    throw ValidationError("prior has " + std::to_string(variances_.size()) +
                          " variances for " + std::to_string(means_.cols()) + " dimensions");
  }
  if (mixing_.size() != means_.rows()) {
    throw ValidationError("prior has " + std::to_string(mixing_.size()) +
                          " mixing coefficients for " + std::to_string(means_.rows()) +
                          " classes");
  }
  require_finite(means_.data(), "prior means");
  require_finite(variances_, "prior variances");
  require_finite(mixing_, "prior mixing");
  for (double v : variances_) {
    if (v <= 0.0) throw ValidationError("prior variances must be strictly positive");
  }
  double total = 0.0;
  for (double p : mixing_) {
    if (p < 0.0) throw ValidationError("mixing coefficients must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("mixing coefficients sum to " + format_number(total, 17) +
                          ", expected 1");
  }
}

double GaussianMixturePrior::mean_variance() const {
  return std::accumulate(variances_.begin(), variances_.end(), 0.0) /
         static_cast<double>(variances_.size());
}

std::vector<LabeledFeature> sample(const GaussianMixturePrior& prior, std::size_t count,
                                   std::uint64_t seed) {
  std::vector<LabeledFeature> out;
  out.reserve(count);
  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick(prior.mixing().begin(), prior.mixing().end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = prior.feature_dim();
  for (std::size_t i = 0; i < count; ++i) {
    LabeledFeature f;
    f.label = pick(rng);
    f.x.resize(dim);
    const auto mu = prior.mean(f.label);
    for (std::size_t m = 0; m < dim; ++m) {
      f.x[m] = mu[m] + std::sqrt(prior.variances()[m]) * normal(rng);
    }
    out.push_back(std::move(f));
  }
  return out;
}

Vector responsibilities(const GaussianMixturePrior& prior, std::span<const double> observation,
                        double sensing_var) {
  require_dim(prior, observation);
  require_finite(observation, "observation");
  if (!(sensing_var >= 0.0) || !std::isfinite(sensing_var)) {
    throw ValidationError("sensing variance must be finite and nonnegative");
  }
  const std::size_t classes = prior.num_classes();
  Vector log_w(classes);
  for (ClassIndex l = 0; l < classes; ++l) {
    double acc = std::log(prior.mixing()[l]);
    const auto mu = prior.mean(l);
    for (std::size_t m = 0; m < prior.feature_dim(); ++m) {
      const double var = prior.variances()[m] + sensing_var;
      const double diff = observation[m] - mu[m];
      acc -= 0.5 * (diff * diff / var + std::log(2.0 * std::numbers::pi * var));
    }
    log_w[l] = acc;
  }
  const double peak = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  for (double& w : log_w) {
    w = std::exp(w - peak);
    total += w;
  }
  for (double& w : log_w) w /= total;
  return log_w;
}

double pairwise_md(const GaussianMixturePrior& prior, ClassIndex l, ClassIndex l2) {
  require_class(prior, l);
  require_class(prior, l2);
  const auto a = prior.mean(l);
  const auto b = prior.mean(l2);
  double g = 0.0;
  for (std::size_t m = 0; m < prior.feature_dim(); ++m) {
    const double diff = a[m] - b[m];
    g += diff * diff / prior.variances()[m];
  }
  return g;
}

ClassPairDistance min_md(const GaussianMixturePrior& prior) {
  const std::size_t classes = prior.num_classes();
  if (classes < 2) throw ValidationError("minimum MD needs at least two classes");
  ClassPairDistance best{std::numeric_limits<double>::infinity(), {0, 1}};
  for (ClassIndex i = 0; i < classes; ++i) {
    for (ClassIndex j = i + 1; j < classes; ++j) {
      const double g = pairwise_md(prior, i, j);
      if (g < best.distance) best = {g, {i, j}};
    }
  }
  return best;
}

DiscriminativePrior discriminative_prior(const GaussianMixturePrior& prior) {
  const std::size_t classes = prior.num_classes();
  if (classes < 2) throw ValidationError("discriminative prior needs at least two classes");
  const std::size_t dim = prior.feature_dim();
  DiscriminativePrior out{Vector(dim, std::numeric_limits<double>::infinity()),
                          std::vector<ClassPair>(dim, {0, 1})};
  for (ClassIndex i = 0; i < classes; ++i) {
    for (ClassIndex j = i + 1; j < classes; ++j) {
      for (std::size_t m = 0; m < dim; ++m) {
        const double diff = prior.means()(i, m) - prior.means()(j, m);
        if (diff * diff < out.delta[m]) {
          out.delta[m] = diff * diff;
          out.min_pair[m] = {i, j};
        }
      }
    }
  }
  return out;
}

Vector class_log_scores(const GaussianMixturePrior& prior, std::span<const double> x) {
  require_dim(prior, x);
  require_finite(x, "feature vector");
  Vector scores(prior.num_classes());
  for (ClassIndex l = 0; l < prior.num_classes(); ++l) {
    double acc = std::log(prior.mixing()[l]);
    const auto mu = prior.mean(l);
    for (std::size_t m = 0; m < prior.feature_dim(); ++m) {
      const double var = prior.variances()[m];
      const double diff = x[m] - mu[m];
      acc -= 0.5 * (diff * diff / var + std::log(2.0 * std::numbers::pi * var));
    }
    scores[l] = acc;
  }
  return scores;
}

ClassIndex argmax_class(std::span<const double> scores) {
  ClassIndex best = 0;
  for (ClassIndex l = 1; l < scores.size(); ++l) {
    if (scores[l] > scores[best]) best = l;
  }
  return best;
}

ClassIndex map_classify(const GaussianMixturePrior& prior, std::span<const double> x) {
  const Vector scores = class_log_scores(prior, x);
  return argmax_class(scores);
}

GaussianMixturePrior fit_from_samples(std::span<const LabeledFeature> samples,
                                      std::size_t num_classes, double variance_floor) {
  if (num_classes == 0) throw ValidationError("fit needs at least one class");
  if (samples.empty()) throw ValidationError("fit needs samples");
  const std::size_t dim = samples.front().x.size();
  if (dim == 0) throw ValidationError("samples have zero feature dimension");

  std::vector<std::size_t> counts(num_classes, 0);
  Matrix sums(num_classes, dim);
  for (const auto& s : samples) {
    if (s.label >= num_classes) {
      throw ValidationError("sample label " + std::to_string(s.label) + " out of range for " +
                            std::to_string(num_classes) + " classes");
    }
    if (s.x.size() != dim) throw ValidationError("samples have inconsistent dimensions");
    require_finite(s.x, "sample");
    ++counts[s.label];
    for (std::size_t m = 0; m < dim; ++m) sums(s.label, m) += s.x[m];
  }

  std::string absent;
  std::string sparse;
  for (ClassIndex l = 0; l < num_classes; ++l) {
    if (counts[l] == 0) {
      absent += (absent.empty() ? "" : ", ") + std::to_string(l);
    } else if (counts[l] < 2) {
      sparse += (sparse.empty() ? "" : ", ") + std::to_string(l);
    }
  }
  if (!absent.empty()) throw ValidationError("classes absent from samples: " + absent);
  if (!sparse.empty()) throw ValidationError("classes with fewer than 2 samples: " + sparse);

  Matrix means(num_classes, dim);
  for (ClassIndex l = 0; l < num_classes; ++l) {
    for (std::size_t m = 0; m < dim; ++m) means(l, m) = sums(l, m) / static_cast<double>(counts[l]);
  }

  Vector variances(dim, 0.0);
  for (const auto& s : samples) {
    for (std::size_t m = 0; m < dim; ++m) {
      const double diff = s.x[m] - means(s.label, m);
      variances[m] += diff * diff;
    }
  }
  const double dof = static_cast<double>(samples.size() - num_classes);
  for (double& v : variances) v = std::max(v / dof, variance_floor);

  Vector mixing(num_classes);
  for (ClassIndex l = 0; l < num_classes; ++l) {
    mixing[l] = static_cast<double>(counts[l]) / static_cast<double>(samples.size());
  }
  return GaussianMixturePrior(std::move(means), std::move(variances), std::move(mixing));
}

GaussianMixturePrior make_synthetic_prior(std::size_t num_classes, std::size_t feature_dim,
                                          double target_min_md, std::uint64_t seed) {
  if (num_classes < 2) throw ValidationError("synthetic prior needs at least two classes");
  if (feature_dim == 0) throw ValidationError("synthetic prior needs a feature dimension");
  if (!(target_min_md > 0.0)) throw ValidationError("target minimum MD must be positive");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(num_classes, feature_dim);
  for (std::size_t i = 0; i < num_classes * feature_dim; ++i) {
    means(i / feature_dim, i % feature_dim) = normal(rng);
  }
  const Vector unit(feature_dim, 1.0);
  const Vector uniform(num_classes, 1.0 / static_cast<double>(num_classes));
  const double raw = min_md(GaussianMixturePrior(means, unit, uniform)).distance;
  if (!(raw > 0.0)) throw ValidationError("synthetic means collided; choose another seed");
  const double scale = std::sqrt(target_min_md / raw);
  for (std::size_t l = 0; l < num_classes; ++l) {
    for (double& v : means.row(l)) v *= scale;
  }
  return GaussianMixturePrior(std::move(means), unit, uniform);
}

std::string prior_to_json(const GaussianMixturePrior& prior) {
  nlohmann::ordered_json j;
  j["L"] = prior.num_classes();
  j["M"] = prior.feature_dim();
  j["means"] = prior.means().to_rows();
  j["variances"] = prior.variances();
  j["mixing"] = prior.mixing();
  return j.dump(2);
}

GaussianMixturePrior prior_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const auto classes = j.at("L").get<std::size_t>();
    const auto dim = j.at("M").get<std::size_t>();
    auto means = Matrix::from_rows(j.at("means").get<std::vector<Vector>>());
    if (means.rows() != classes || means.cols() != dim) {
      throw ValidationError("prior means do not match declared L x M = " +
                            std::to_string(classes) + " x " + std::to_string(dim));
    }
    return GaussianMixturePrior(std::move(means), j.at("variances").get<Vector>(),
                                j.at("mixing").get<Vector>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed prior document: ") + e.what());
  }
}

void write_samples_csv(std::ostream& out, std::span<const LabeledFeature> samples) {
  const std::size_t dim = samples.empty() ? 0 : samples.front().x.size();
  out << "label";
  for (std::size_t m = 0; m < dim; ++m) out << ",x_" << (m + 1);
  out << '\n';
  for (const auto& s : samples) {
    out << (s.label + 1);
    for (double v : s.x) out << ',' << format_number(v, 17);
    out << '\n';
  }
}

std::vector<LabeledFeature> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("label", 0) != 0) {
    throw ValidationError("samples CSV must start with a 'label,x_1,...' header");
  }
  std::vector<LabeledFeature> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    LabeledFeature f;
    bool first = true;
    while (std::getline(ss, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size()) {
        throw ValidationError("samples CSV row " + std::to_string(row) + ": bad value '" +
                              field + "'");
      }
      if (first) {
        if (v < 1.0 || v != std::floor(v)) {
          throw ValidationError("samples CSV row " + std::to_string(row) +
                                ": labels are 1-based integers");
        }
        f.label = static_cast<ClassIndex>(v) - 1;
        first = false;
      } else {
        f.x.push_back(v);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace isea
