#include "isea/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <exception>
#include <mutex>
#include <thread>

#include "isea/errors.hpp"
#include "isea/random.hpp"
#include "isea/transceiver.hpp"

namespace isea {

namespace {

constexpr std::uint64_t kStreamCalibrationNoise = 7;

std::size_t feature_columns(const ExperimentConfig& config, std::size_t num_subcarriers) {
  return config.scheme == Scheme::kTdm ? config.prior.feature_dim() : num_subcarriers;
}

// Unbiased sample standard deviation; zero for a single trial.
double sample_std(const Vector& values, double mean) {
  if (values.size() < 2) return 0.0;
  KahanSum acc;
  for (double v : values) acc.add((v - mean) * (v - mean));
  return std::sqrt(acc.value() / static_cast<double>(values.size() - 1));
}

FdmInstance instance_for(const PointSetup& setup, const ChannelRealization& channel,
                         double noise_var) {
  const std::size_t devices = setup.num_devices;
  const std::size_t dim = setup.delta.size();
  FdmInstance inst{Matrix(devices, dim), Vector(devices), setup.moments, setup.est_vars,
                   noise_var, setup.delta};
  for (std::size_t k = 0; k < devices; ++k) {
    inst.budgets[k] = setup.profiles[k].power_budget;
    for (std::size_t m = 0; m < dim; ++m) inst.gains(k, m) = channel.gains(k, m);
  }
  return inst;
}

TransceiverDesign pad_design(const TransceiverDesign& design, std::size_t columns) {
  TransceiverDesign out{Matrix(design.tx.rows(), columns), Vector(columns, 0.0), design.scheme};
  for (std::size_t k = 0; k < design.tx.rows(); ++k) {
    for (std::size_t m = 0; m < design.tx.cols(); ++m) out.tx(k, m) = design.tx(k, m);
  }
  for (std::size_t m = 0; m < design.rx.size(); ++m) out.rx[m] = design.rx[m];
  return out;
}

std::vector<std::vector<EstimatedFeature>> sense_batch(const ExperimentConfig& config,
                                                       const PointSetup& setup,
                                                       EstimatorKind kind,
                                                       const std::vector<LabeledFeature>& batch,
                                                       std::uint64_t trial_seed) {
  std::vector<std::vector<EstimatedFeature>> out(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    out[s].reserve(setup.num_devices);
    for (std::size_t k = 0; k < setup.num_devices; ++k) {
      const auto obs = observe(batch[s], setup.profiles[k], k,
                               derive_seed(trial_seed, {static_cast<std::uint64_t>(Stream::kSensing), s, k}));
      out[s].push_back(estimate(kind, obs, setup.profiles[k], config.prior, batch[s].label));
    }
  }
  return out;
}

}  // namespace

Calibration calibrate(const GaussianMixturePrior& prior, EstimatorKind kind, double sensing_var,
                      std::size_t samples, VarianceModel model, std::uint64_t seed) {
  if (samples < prior.num_classes() + 1) {
    throw ValidationError("calibration needs more samples than classes");
  }
  const std::uint64_t key = derive_seed(seed, {std::bit_cast<std::uint64_t>(sensing_var)});
  const auto features = sample(prior, samples, derive_seed(key, {0}));
  const std::size_t dim = prior.feature_dim();
  const std::size_t classes = prior.num_classes();
  DeviceProfile profile{sensing_var, 1.0, {}};

  std::vector<EstimatedFeature> estimates;
  estimates.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto obs = observe(features[i], profile, 0, derive_seed(key, {kStreamCalibrationNoise, i}));
    estimates.push_back(estimate(kind, obs, profile, prior, features[i].label));
  }

  Calibration out{Vector(dim, 0.0), Vector(dim, 0.0)};
  Matrix class_sum(classes, dim);
  std::vector<std::size_t> class_count(classes, 0);
  for (std::size_t i = 0; i < samples; ++i) {
    ++class_count[features[i].label];
    for (std::size_t m = 0; m < dim; ++m) {
      const double v = estimates[i].x_hat[m];
      out.second_moment[m] += v * v;
      class_sum(features[i].label, m) += v;
      if (model == VarianceModel::kPosterior) out.est_var[m] += estimates[i].posterior_var[m];
    }
  }
  for (double& v : out.second_moment) v /= static_cast<double>(samples);
  if (model == VarianceModel::kPosterior) {
    for (double& v : out.est_var) v /= static_cast<double>(samples);
  } else {
    std::size_t used = 0;
    for (std::size_t l = 0; l < classes; ++l) used += class_count[l] > 0 ? 1 : 0;
    for (std::size_t i = 0; i < samples; ++i) {
      const std::size_t l = features[i].label;
      for (std::size_t m = 0; m < dim; ++m) {
        const double diff = estimates[i].x_hat[m] - class_sum(l, m) / static_cast<double>(class_count[l]);
        out.est_var[m] += diff * diff;
      }
    }
    for (double& v : out.est_var) v /= static_cast<double>(samples - used);
  }
  for (double& v : out.est_var) v = std::max(v, kVarianceFloor);
  for (double& v : out.second_moment) v = std::max(v, kVarianceFloor);
  return out;
}

PointSetup prepare_point(const ExperimentConfig& config, double sweep_value,
                         std::size_t point_index) {
  PointSetup setup;
  setup.sweep_value = sweep_value;
  setup.num_devices = config.num_devices;
  std::size_t subcarriers = config.num_subcarriers;
  setup.comm_snr_db = config.comm_snr_db;
  setup.sensing_snr_db = config.sensing_snr_db;
  switch (config.sweep) {
    case SweepVariable::kCommSnr: setup.comm_snr_db = sweep_value; break;
    case SweepVariable::kSensingSnr: setup.sensing_snr_db = sweep_value; break;
    case SweepVariable::kDevices: setup.num_devices = static_cast<std::size_t>(sweep_value); break;
    case SweepVariable::kSubcarriers: subcarriers = static_cast<std::size_t>(sweep_value); break;
  }
  setup.num_columns = feature_columns(config, subcarriers);
  setup.seed = derive_seed(config.seed, {point_index});

  const std::size_t devices = setup.num_devices;
  const std::size_t dim = config.prior.feature_dim();
  const bool explicit_vars =
      !config.sensing_vars.empty() && config.sweep != SweepVariable::kSensingSnr;
  if (explicit_vars) {
    if (config.sensing_vars.size() != devices) {
      throw ValidationError("sensing_vars has " + std::to_string(config.sensing_vars.size()) +
                            " entries for K = " + std::to_string(devices));
    }
    setup.sensing_vars = config.sensing_vars;
  } else {
    Rng rng(derive_seed(config.seed, Stream::kSensingVars, devices));
    std::uniform_real_distribution<double> weight(1.0 - config.sensing_spread,
                                                  1.0 + config.sensing_spread);
    Vector spread(devices);
    for (double& g : spread) g = config.sensing_spread > 0.0 ? weight(rng) : 1.0;
    setup.sensing_vars =
        sensing_vars_for_snr(config.prior.mean_variance(), setup.sensing_snr_db, spread);
  }

  const double budget = budget_for_snr(setup.comm_snr_db, config.noise_var);
  setup.est_vars = Matrix(devices, dim);
  setup.moments = Matrix(devices, dim);
  std::map<double, Calibration> cache;
  for (std::size_t k = 0; k < devices; ++k) {
    const double s2 = setup.sensing_vars[k];
    auto it = cache.find(s2);
    if (it == cache.end()) {
      it = cache
               .emplace(s2, calibrate(config.prior, config.estimator, s2,
                                      config.calibration_samples, config.variance_model,
                                      derive_seed(config.seed, Stream::kCalibration)))
               .first;
    }
    DeviceProfile profile{s2, budget, Vector(setup.num_columns, 1.0)};
    for (std::size_t m = 0; m < dim; ++m) {
      setup.est_vars(k, m) = it->second.est_var[m];
      setup.moments(k, m) = it->second.second_moment[m];
      profile.feature_second_moments[m] = it->second.second_moment[m];
    }
    setup.profiles.push_back(std::move(profile));
  }
  setup.delta = config.prior.num_classes() >= 2 ? discriminative_prior(config.prior).delta
                                                : Vector(dim, 0.0);
  return setup;
}

TrialRecord run_trial(const ExperimentConfig& config, const PointSetup& setup,
                      std::uint64_t trial_seed) {
  const std::size_t devices = setup.num_devices;
  const std::size_t classes = config.prior.num_classes();
  const ChannelRealization channel =
      sample_channel(devices, setup.num_columns, config.scheme, {config.channel_scale},
                     config.noise_var, derive_seed(trial_seed, Stream::kChannel));
  const FdmInstance inst = instance_for(setup, channel, config.noise_var);
  const auto batch =
      sample(config.prior, config.samples_per_trial, derive_seed(trial_seed, Stream::kFeature));
  const auto estimates = sense_batch(config, setup, config.estimator, batch, trial_seed);

  TrialRecord record;
  record.solvers.resize(config.solvers.size());
  for (std::size_t j = 0; j < config.solvers.size(); ++j) {
    SolverTrial& out = record.solvers[j];
    out.confusion.assign(classes * classes, 0);
    const bool ideal = config.solvers[j] == kIdealSolver;
    TransceiverDesign design;
    if (!ideal) {
      const SolveReport report =
          solve(parse_solver(config.solvers[j]), inst, config.scheme, config.dual);
      if (!report.converged) {
        out.excluded = true;
        continue;
      }
      out.mse = total_mse(inst, report.design);
      out.md = total_md(inst, report.design);
      design = pad_design(report.design, setup.num_columns);
      design.scheme = config.scheme;
    }
    for (std::size_t s = 0; s < batch.size(); ++s) {
      Vector decoded;
      if (ideal) {
        decoded = ideal_average(estimates[s]);
      } else {
        const auto agg = transmit_aggregate(
            estimates[s], setup.profiles, channel, design,
            derive_seed(trial_seed, {static_cast<std::uint64_t>(Stream::kAirNoise), s}));
        decoded = agg.decoded(devices);
      }
      const ClassIndex predicted = map_classify(config.prior, decoded);
      if (predicted == batch[s].label) ++out.correct;
      ++out.confusion[batch[s].label * classes + predicted];
    }
  }
  return record;
}

std::size_t thread_count() {
  const char* env = std::getenv("ISEA_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long value = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || value < 1) {
    throw ValidationError(std::string("ISEA_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<std::size_t>(value);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SweepResult sweep(const ExperimentConfig& config) {
  validate(config);
  const std::size_t classes = config.prior.num_classes();
  SweepResult result;
  for (std::size_t p = 0; p < config.sweep_values.size(); ++p) {
    const PointSetup setup = prepare_point(config, config.sweep_values[p], p);
    std::vector<TrialRecord> trials(config.trials);
    parallel_for(config.trials, [&](std::size_t t) {
      trials[t] = run_trial(config, setup, derive_seed(setup.seed, {t}));
    });
    result.total_trials += config.trials;

    for (std::size_t j = 0; j < config.solvers.size(); ++j) {
      MetricsRecord record;
      record.sweep_value = setup.sweep_value;
      record.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
      Vector per_trial;
      KahanSum mse;
      KahanSum md;
      std::size_t correct = 0;
      for (const auto& trial : trials) {
        const SolverTrial& s = trial.solvers[j];
        if (s.excluded) {
          ++record.excluded_trials;
          continue;
        }
        correct += s.correct;
        per_trial.push_back(static_cast<double>(s.correct) /
                            static_cast<double>(config.samples_per_trial));
        mse.add(s.mse);
        md.add(s.md);
        for (std::size_t i = 0; i < classes * classes; ++i) {
          record.confusion[i / classes][i % classes] += s.confusion[i];
        }
      }
      const double kept = static_cast<double>(per_trial.size());
      if (!per_trial.empty()) {
        record.acc_mean =
            static_cast<double>(correct) / (kept * static_cast<double>(config.samples_per_trial));
        record.acc_std = sample_std(per_trial, record.acc_mean);
        record.mse_mean = mse.value() / kept;
        record.md_mean = md.value() / kept;
      } else {
        record.acc_mean = record.acc_std = record.mse_mean = record.md_mean =
            std::numeric_limits<double>::quiet_NaN();
      }
      result.worst_excluded_fraction =
          std::max(result.worst_excluded_fraction, static_cast<double>(record.excluded_trials) /
                                                       static_cast<double>(config.trials));
      result.records[config.solvers[j]].push_back(std::move(record));
    }
  }
  return result;
}

std::vector<EstimatorPoint> estimator_sweep(const ExperimentConfig& config) {
  validate(config);
  const std::size_t classes = config.prior.num_classes();
  const std::size_t dim = config.prior.feature_dim();
  std::vector<EstimatorPoint> out;
  for (std::size_t p = 0; p < config.sweep_values.size(); ++p) {
    ExperimentConfig local = config;
    local.sweep = SweepVariable::kSensingSnr;
    const PointSetup setup = prepare_point(local, config.sweep_values[p], p);

    struct Partial {
      std::vector<double> sq_err;    // per estimator
      std::vector<double> sq_err2;   // per estimator
      std::vector<double> analytic;  // per estimator
      std::vector<std::size_t> correct;
      std::vector<std::vector<std::size_t>> confusion;
    };
    const std::size_t kinds = config.estimators.size();
    std::vector<Partial> partials(config.trials);
    parallel_for(config.trials, [&](std::size_t t) {
      const std::uint64_t trial_seed = derive_seed(setup.seed, {t});
      const auto batch = sample(config.prior, config.samples_per_trial,
                                derive_seed(trial_seed, Stream::kFeature));
      Partial part{Vector(kinds, 0.0), Vector(kinds, 0.0), Vector(kinds, 0.0),
                   std::vector<std::size_t>(kinds, 0),
                   std::vector<std::vector<std::size_t>>(kinds,
                                                         std::vector<std::size_t>(classes * classes, 0))};
      for (std::size_t e = 0; e < kinds; ++e) {
        const EstimatorKind kind = config.estimators[e];
        const auto estimates = sense_batch(config, setup, kind, batch, trial_seed);
        for (std::size_t s = 0; s < batch.size(); ++s) {
          for (std::size_t k = 0; k < setup.num_devices; ++k) {
            const auto& est = estimates[s][k];
            for (std::size_t m = 0; m < dim; ++m) {
              const double err = est.x_hat[m] - batch[s].x[m];
              part.sq_err[e] += err * err;
              part.sq_err2[e] += err * err * err * err;
              part.analytic[e] += est.posterior_var[m];
            }
          }
          const ClassIndex predicted = map_classify(config.prior, ideal_average(estimates[s]));
          if (predicted == batch[s].label) ++part.correct[e];
          ++part.confusion[e][batch[s].label * classes + predicted];
        }
      }
      partials[t] = std::move(part);
    });

    const double elements = static_cast<double>(config.trials * config.samples_per_trial *
                                                 setup.num_devices * dim);
    for (std::size_t e = 0; e < kinds; ++e) {
      EstimatorPoint point;
      point.sensing_snr_db = setup.sensing_snr_db;
      point.estimator = config.estimators[e];
      KahanSum sq;
      KahanSum sq2;
      KahanSum analytic;
      Vector per_trial;
      std::size_t correct = 0;
      point.accuracy.sweep_value = setup.sensing_snr_db;
      point.accuracy.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
      for (const auto& part : partials) {
        sq.add(part.sq_err[e]);
        sq2.add(part.sq_err2[e]);
        analytic.add(part.analytic[e]);
        correct += part.correct[e];
        per_trial.push_back(static_cast<double>(part.correct[e]) /
                            static_cast<double>(config.samples_per_trial));
        for (std::size_t i = 0; i < classes * classes; ++i) {
          point.accuracy.confusion[i / classes][i % classes] += part.confusion[e][i];
        }
      }
      point.empirical_mse = sq.value() / elements;
      const double var = std::max(0.0, sq2.value() / elements - point.empirical_mse * point.empirical_mse);
      point.standard_error = std::sqrt(var / elements);
      point.analytic_mse = analytic.value() / elements;
      point.accuracy.acc_mean = static_cast<double>(correct) /
                                static_cast<double>(config.trials * config.samples_per_trial);
      point.accuracy.acc_std = sample_std(per_trial, point.accuracy.acc_mean);
      point.accuracy.mse_mean = point.empirical_mse;
      point.accuracy.md_mean = 0.0;
      out.push_back(std::move(point));
    }
  }
  return out;
}

std::vector<DesignPoint> design_compare(const ExperimentConfig& config,
                                        const std::vector<std::string>& solvers) {
  validate(config);
  std::vector<SolverKind> kinds;
  for (const auto& s : solvers) kinds.push_back(parse_solver(s));
  std::vector<DesignPoint> out;
  for (std::size_t p = 0; p < config.sweep_values.size(); ++p) {
    const PointSetup setup = prepare_point(config, config.sweep_values[p], p);
    // Per trial and solver: mse, md, converged flag.
    std::vector<std::vector<std::array<double, 3>>> results(config.trials);
    parallel_for(config.trials, [&](std::size_t t) {
      const std::uint64_t trial_seed = derive_seed(setup.seed, {t});
      const ChannelRealization channel =
          sample_channel(setup.num_devices, setup.num_columns, config.scheme,
                         {config.channel_scale}, config.noise_var,
                         derive_seed(trial_seed, Stream::kChannel));
      const FdmInstance inst = instance_for(setup, channel, config.noise_var);
      auto& row = results[t];
      for (const SolverKind kind : kinds) {
        const SolveReport report = solve(kind, inst, config.scheme, config.dual);
        row.push_back({total_mse(inst, report.design), total_md(inst, report.design),
                       report.converged ? 1.0 : 0.0});
      }
    });
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      DesignPoint point;
      point.sweep_value = setup.sweep_value;
      point.solver = solvers[j];
      KahanSum mse;
      KahanSum md;
      for (const auto& row : results) {
        if (row[j][2] == 0.0) {
          ++point.excluded_trials;
          continue;
        }
        mse.add(row[j][0]);
        md.add(row[j][1]);
      }
      const double kept = static_cast<double>(config.trials - point.excluded_trials);
      point.mse_mean = kept > 0 ? mse.value() / kept : std::numeric_limits<double>::quiet_NaN();
      point.md_mean = kept > 0 ? md.value() / kept : std::numeric_limits<double>::quiet_NaN();
      out.push_back(std::move(point));
    }
  }
  return out;
}

}  // namespace isea
