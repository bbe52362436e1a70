#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "isea/errors.hpp"
#include "isea/gm_prior.hpp"

using namespace isea;

namespace {

GaussianMixturePrior random_prior(std::size_t classes, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> uniform(0.3, 2.0);
  Matrix means(classes, dim);
  Vector vars(dim);
  Vector mixing(classes);
  for (std::size_t l = 0; l < classes; ++l) {
    for (std::size_t m = 0; m < dim; ++m) means(l, m) = normal(rng);
  }
  for (double& v : vars) v = uniform(rng);
  double total = 0.0;
  for (double& p : mixing) total += (p = uniform(rng));
  for (double& p : mixing) p /= total;
  // Renormalize so the sum is one to machine precision.
  mixing.back() = 1.0;
  for (std::size_t l = 0; l + 1 < classes; ++l) mixing.back() -= mixing[l];
  return {means, vars, mixing};
}

// Posterior class probabilities evaluated directly in long double.
std::vector<long double> posterior_oracle(const GaussianMixturePrior& p, std::span<const double> y,
                                          double noise) {
  std::vector<long double> w(p.num_classes());
  long double total = 0.0L;
  for (std::size_t l = 0; l < p.num_classes(); ++l) {
    long double density = p.mixing()[l];
    for (std::size_t m = 0; m < p.feature_dim(); ++m) {
      const long double var = static_cast<long double>(p.variances()[m]) + noise;
      const long double d = static_cast<long double>(y[m]) - p.means()(l, m);
      density *= std::exp(-d * d / (2.0L * var)) / std::sqrt(2.0L * 3.14159265358979323846L * var);
    }
    w[l] = density;
    total += density;
  }
  for (auto& v : w) v /= total;
  return w;
}

// Symmetric KL divergence of two Gaussians with general (here diagonal) covariances.
double symmetric_kl(std::span<const double> mu1, std::span<const double> var1,
                    std::span<const double> mu2, std::span<const double> var2) {
  double kl12 = 0.0;
  double kl21 = 0.0;
  for (std::size_t m = 0; m < mu1.size(); ++m) {
    const double d = mu1[m] - mu2[m];
    kl12 += 0.5 * (var1[m] / var2[m] + d * d / var2[m] - 1.0 + std::log(var2[m] / var1[m]));
    kl21 += 0.5 * (var2[m] / var1[m] + d * d / var1[m] - 1.0 + std::log(var1[m] / var2[m]));
  }
  return kl12 + kl21;
}

}  // namespace

TEST_CASE("prior construction rejects invalid parameters") {
  CHECK_THROWS_AS(GaussianMixturePrior(Matrix(2, 2), Vector{1.0, 0.0}, Vector{0.5, 0.5}),
                  ValidationError);
  CHECK_THROWS_AS(GaussianMixturePrior(Matrix(2, 2), Vector{1.0, 1.0}, Vector{0.6, 0.5}),
                  ValidationError);
  CHECK_THROWS_AS(GaussianMixturePrior(Matrix(2, 2), Vector{1.0, 1.0}, Vector{1.0}),
                  ValidationError);
  CHECK_THROWS_AS(GaussianMixturePrior(Matrix(2, 2), Vector{1.0, 1.0}, Vector{1.5, -0.5}),
                  ValidationError);
}

TEST_CASE("sampling") {
  SUBCASE("degenerate single class stays at the mean") {
    const GaussianMixturePrior p(Matrix::from_rows({{1.0, -2.0}}), Vector{1e-12, 1e-12}, Vector{1.0});
    for (const auto& f : sample(p, 1000, 3)) {
      CHECK(f.label == 0);
      CHECK(std::abs(f.x[0] - 1.0) < 1e-5);
      CHECK(std::abs(f.x[1] + 2.0) < 1e-5);
    }
  }
  SUBCASE("class frequencies and moments") {
    const GaussianMixturePrior p(Matrix::from_rows({{0.0, 3.0}, {-2.0, 1.0}}), Vector{0.5, 2.0},
                                 Vector{0.5, 0.5});
    const std::size_t n = 100000;
    const auto samples = sample(p, n, 11);
    std::size_t count[2] = {0, 0};
    double sum[2][2] = {};
    double sq[2][2] = {};
    for (const auto& f : samples) {
      ++count[f.label];
      for (std::size_t m = 0; m < 2; ++m) {
        sum[f.label][m] += f.x[m];
        sq[f.label][m] += f.x[m] * f.x[m];
      }
    }
    CHECK(std::abs(static_cast<double>(count[0]) / n - 0.5) <= 0.01);
    for (std::size_t l = 0; l < 2; ++l) {
      const double nl = static_cast<double>(count[l]);
      for (std::size_t m = 0; m < 2; ++m) {
        const double mean = sum[l][m] / nl;
        const double var = sq[l][m] / nl - mean * mean;
        const double sd = std::sqrt(p.variances()[m]);
        CHECK(std::abs(mean - p.means()(l, m)) <= 3.0 * sd / std::sqrt(nl));
        // Sample variance has standard error sigma^2 sqrt(2 / n).
        CHECK(std::abs(var - p.variances()[m]) <= 4.0 * p.variances()[m] * std::sqrt(2.0 / nl));
      }
    }
  }
  SUBCASE("zero count and determinism") {
    const auto p = make_synthetic_prior(3, 2, 4.0, 5);
    CHECK(sample(p, 0, 1).empty());
    const auto a = sample(p, 50, 9);
    const auto b = sample(p, 50, 9);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].label == b[i].label);
      CHECK(a[i].x == b[i].x);
    }
  }
}

TEST_CASE("responsibilities") {
  SUBCASE("single class") {
    const GaussianMixturePrior p(Matrix::from_rows({{0.0}}), Vector{1.0}, Vector{1.0});
    CHECK(responsibilities(p, Vector{5.0}, 0.3)[0] == 1.0);
  }
  SUBCASE("symmetric means give one half") {
    const GaussianMixturePrior p(Matrix::from_rows({{-1.0, 2.0}, {3.0, 2.0}}), Vector{1.0, 1.0},
                                 Vector{0.5, 0.5});
    const Vector theta = responsibilities(p, Vector{1.0, 7.0}, 0.5);
    CHECK(std::abs(theta[0] - 0.5) <= 1e-12);
    CHECK(std::abs(theta[1] - 0.5) <= 1e-12);
  }
  SUBCASE("matches long double density oracle") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = random_prior(5, 3, 100 + trial);
      const Vector y{normal(rng), normal(rng), normal(rng)};
      const double noise = trial % 2 ? 0.7 : 0.0;
      const Vector theta = responsibilities(p, y, noise);
      const auto oracle = posterior_oracle(p, y, noise);
      double total = 0.0;
      for (std::size_t l = 0; l < 5; ++l) {
        CHECK(std::abs(theta[l] - static_cast<double>(oracle[l])) <= 1e-10);
        CHECK(theta[l] >= 0.0);
        total += theta[l];
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
  SUBCASE("far observation still normalizes") {
    const auto p = random_prior(4, 2, 7);
    const Vector theta = responsibilities(p, Vector{1e4, -1e4}, 0.0);
    double total = 0.0;
    for (double v : theta) {
      CHECK(std::isfinite(v));
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  SUBCASE("huge sensing variance returns the mixing weights") {
    const auto p = random_prior(4, 3, 8);
    const Vector theta = responsibilities(p, Vector{0.3, -1.0, 2.0}, 1e12);
    for (std::size_t l = 0; l < 4; ++l) CHECK(std::abs(theta[l] - p.mixing()[l]) <= 1e-4);
  }
  SUBCASE("NaN input is rejected") {
    const auto p = random_prior(2, 2, 9);
    CHECK_THROWS_AS(responsibilities(p, Vector{std::nan(""), 0.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(responsibilities(p, Vector{0.0, 0.0}, -1.0), ValidationError);
  }
}

TEST_CASE("Mahalanobis distances") {
  SUBCASE("hand values") {
    const GaussianMixturePrior p(Matrix::from_rows({{0.0}, {2.0}}), Vector{4.0}, Vector{0.5, 0.5});
    CHECK(pairwise_md(p, 0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pairwise_md(p, 1, 1) == 0.0);
  }
  SUBCASE("equals symmetric KL of the class Gaussians") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_prior(5, 4, 300 + trial);
      for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) {
          const double kl = symmetric_kl(p.mean(a), p.variances(), p.mean(b), p.variances());
          CHECK(std::abs(pairwise_md(p, a, b) - kl) <= 1e-10 * std::max(1.0, kl));
          CHECK(pairwise_md(p, a, b) == pairwise_md(p, b, a));
          CHECK(pairwise_md(p, a, b) >= 0.0);
        }
      }
    }
  }
  SUBCASE("minimum over pairs") {
    const GaussianMixturePrior line(Matrix::from_rows({{0.0}, {1.0}, {2.0}}), Vector{1.0},
                                    Vector{0.25, 0.25, 0.5});
    const auto best = min_md(line);
    CHECK(best.distance == doctest::Approx(1.0));
    CHECK(best.pair == ClassPair{0, 1});

    const auto p = random_prior(5, 3, 41);
    double brute = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 5; ++a) {
      for (std::size_t b = a + 1; b < 5; ++b) brute = std::min(brute, pairwise_md(p, a, b));
    }
    CHECK(min_md(p).distance == brute);

    const GaussianMixturePrior single(Matrix::from_rows({{0.0}}), Vector{1.0}, Vector{1.0});
    CHECK_THROWS_AS(min_md(single), ValidationError);
  }
}

TEST_CASE("discriminative prior") {
  SUBCASE("two classes") {
    const GaussianMixturePrior p(Matrix::from_rows({{1.0, 5.0}, {-2.0, 4.5}}), Vector{1.0, 1.0},
                                 Vector{0.5, 0.5});
    const auto d = discriminative_prior(p);
    CHECK(d.delta[0] == 9.0);
    CHECK(d.delta[1] == 0.25);
  }
  SUBCASE("duplicated class gives zero") {
    const GaussianMixturePrior p(Matrix::from_rows({{1.0, 2.0}, {3.0, 0.0}, {1.0, 2.0}}),
                                 Vector{1.0, 1.0}, Vector{0.2, 0.3, 0.5});
    for (double v : discriminative_prior(p).delta) CHECK(v == 0.0);
  }
  SUBCASE("per-dimension brute force") {
    const auto p = random_prior(5, 4, 77);
    const auto d = discriminative_prior(p);
    for (std::size_t m = 0; m < 4; ++m) {
      double brute = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) {
          if (a == b) continue;
          const double g = p.means()(a, m) - p.means()(b, m);
          brute = std::min(brute, g * g);
        }
      }
      CHECK(d.delta[m] == brute);
    }
  }
  SUBCASE("single class is an error") {
    const GaussianMixturePrior p(Matrix::from_rows({{0.0}}), Vector{1.0}, Vector{1.0});
    CHECK_THROWS_AS(discriminative_prior(p), ValidationError);
  }
}

TEST_CASE("MAP classifier") {
  SUBCASE("class mean maps to its class") {
    const auto p = make_synthetic_prior(5, 4, 16.0, 3);
    for (std::size_t l = 0; l < 5; ++l) CHECK(map_classify(p, p.mean(l)) == l);
  }
  SUBCASE("prior breaks a likelihood tie") {
    const GaussianMixturePrior p(Matrix::from_rows({{-1.0}, {1.0}}), Vector{1.0}, Vector{0.6, 0.4});
    CHECK(map_classify(p, Vector{0.0}) == 0);
    const GaussianMixturePrior q(Matrix::from_rows({{-1.0}, {1.0}}), Vector{1.0}, Vector{0.5, 0.5});
    CHECK(map_classify(q, Vector{0.0}) == 0);
  }
  SUBCASE("agrees with the direct posterior") {
    const auto p = random_prior(5, 3, 55);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int i = 0; i < 10000; ++i) {
      const Vector x{normal(rng), normal(rng), normal(rng)};
      const auto post = posterior_oracle(p, x, 0.0);
      std::size_t best = 0;
      for (std::size_t l = 1; l < post.size(); ++l) {
        if (post[l] > post[best]) best = l;
      }
      CHECK(map_classify(p, x) == best);
    }
  }
  SUBCASE("shifting every log-prior leaves the decision unchanged") {
    const auto p = random_prior(4, 2, 12);
    const Vector x{0.4, -0.9};
    Vector scores = class_log_scores(p, x);
    const ClassIndex base = argmax_class(scores);
    for (double& s : scores) s += 123.0;
    CHECK(argmax_class(scores) == base);
    CHECK(map_classify(p, x) == base);
  }
  SUBCASE("NaN is rejected") {
    const auto p = random_prior(2, 1, 1);
    CHECK_THROWS_AS(map_classify(p, Vector{std::nan("")}), ValidationError);
  }
}

TEST_CASE("fitting from samples") {
  SUBCASE("recovers a known prior") {
    const auto truth = random_prior(3, 2, 90);
    const std::size_t n = 100000;
    const auto samples = sample(truth, n, 91);
    const auto fit = fit_from_samples(samples, 3);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& f : samples) ++counts[f.label];
    double mix_total = 0.0;
    for (std::size_t l = 0; l < 3; ++l) {
      mix_total += fit.mixing()[l];
      for (std::size_t m = 0; m < 2; ++m) {
        const double tol = 3.0 * std::sqrt(truth.variances()[m] / static_cast<double>(counts[l]));
        CHECK(std::abs(fit.means()(l, m) - truth.means()(l, m)) <= tol);
      }
    }
    CHECK(mix_total == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t m = 0; m < 2; ++m) {
      CHECK(std::abs(fit.variances()[m] - truth.variances()[m]) <=
            4.0 * truth.variances()[m] * std::sqrt(2.0 / static_cast<double>(n)));
    }
  }
  SUBCASE("identical samples hit the variance floor") {
    std::vector<LabeledFeature> same(5, LabeledFeature{0, Vector{2.0, 2.0}});
    const auto fit = fit_from_samples(same, 1);
    CHECK(fit.variances()[0] == kVarianceFloor);
    CHECK(fit.variances()[1] == kVarianceFloor);
  }
  SUBCASE("missing class is reported") {
    std::vector<LabeledFeature> s{{0, {1.0}}, {0, {2.0}}, {2, {1.0}}, {2, {3.0}}};
    try {
      fit_from_samples(s, 4);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find('1') != std::string::npos);
      CHECK(what.find('3') != std::string::npos);
    }
  }
}

TEST_CASE("synthetic prior and serialization") {
  const auto p = make_synthetic_prior(5, 4, 4.0, 1);
  CHECK(p.num_classes() == 5);
  CHECK(p.feature_dim() == 4);
  CHECK(min_md(p).distance == doctest::Approx(4.0).epsilon(1e-12));
  for (double v : p.variances()) CHECK(v == 1.0);

  const auto back = prior_from_json(prior_to_json(p));
  CHECK(back.means().data() == p.means().data());
  CHECK(back.variances() == p.variances());
  CHECK(back.mixing() == p.mixing());
  CHECK_THROWS_AS(prior_from_json("{\"L\": 2}"), ValidationError);

  const auto samples = sample(p, 20, 2);
  std::stringstream csv;
  write_samples_csv(csv, samples);
  CHECK(csv.str().find("\n0,") == std::string::npos);
  const auto parsed = read_samples_csv(csv);
  REQUIRE(parsed.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(parsed[i].label == samples[i].label);
    for (std::size_t m = 0; m < 4; ++m) CHECK(parsed[i].x[m] == samples[i].x[m]);
  }
}
