#include "isea/cli.hpp"

#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "isea/aggregation.hpp"
#include "isea/config.hpp"
#include "isea/errors.hpp"
#include "isea/export.hpp"
#include "isea/pipeline.hpp"
#include "isea/random.hpp"
#include "isea/validation.hpp"

namespace isea {

namespace {

constexpr std::uint64_t kStreamEntropyCases = 9;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::optional<std::size_t> trials;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("-c,--config", opts.config_path, "JSON experiment config (defaults if omitted)");
  app->add_option("-s,--seed", opts.seed, "Root seed, overrides the config");
  app->add_option("-o,--output", opts.output, "Output directory, overrides the config");
  app->add_option("-t,--trials", opts.trials, "Monte Carlo trials per point, overrides the config");
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig config = opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.output.empty()) config.output_dir = opts.output;
  if (opts.trials) config.trials = *opts.trials;
  validate(config);
  return config;
}

std::string join(std::span<const double> values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_number(values[i], kMetricsDigits);
  }
  return out;
}

void write_and_report(const std::filesystem::path& path, const std::string& text, std::ostream& out) {
  write_file(path, text);
  out << "wrote " << path.string() << '\n';
}

int check_exclusions(double worst_fraction, const ExperimentConfig& config, std::ostream& err) {
  if (worst_fraction > config.max_excluded_fraction) {
    err << "error: " << format_number(100.0 * worst_fraction, 4)
        << "% of trials excluded for non-convergence (limit "
        << format_number(100.0 * config.max_excluded_fraction, 4) << "%)\n";
    return kExitNonConvergence;
  }
  return kExitOk;
}

int run_estimator_sweep(const ExperimentConfig& config, std::ostream& out) {
  const auto points = estimator_sweep(config);
  std::ostringstream csv;
  csv << "sensing_snr_db,estimator,empirical_mse,standard_error,analytic_mse,acc_mean,acc_std\n";
  std::map<EstimatorKind, std::vector<MetricsRecord>> by_kind;
  for (const auto& p : points) {
    csv << format_number(p.sensing_snr_db, kMetricsDigits) << ',' << estimator_name(p.estimator)
        << ',' << format_number(p.empirical_mse, kMetricsDigits) << ','
        << format_number(p.standard_error, kMetricsDigits) << ','
        << format_number(p.analytic_mse, kMetricsDigits) << ','
        << format_number(p.accuracy.acc_mean, kMetricsDigits) << ','
        << format_number(p.accuracy.acc_std, kMetricsDigits) << '\n';
    by_kind[p.estimator].push_back(p.accuracy);
  }
  write_and_report(config.output_dir / "estimator_sweep.csv", csv.str(), out);
  for (const auto& [kind, records] : by_kind) {
    const std::string name(estimator_name(kind));
    export_records(records, config.output_dir / ("estimator_accuracy_" + name + ".csv"),
                   config.output_dir / ("estimator_confusion_" + name + ".csv"));
    out << "wrote " << (config.output_dir / ("estimator_accuracy_" + name + ".csv")).string() << '\n';
  }
  return kExitOk;
}

int run_entropy_report(const ExperimentConfig& config, std::ostream& out) {
  std::vector<Vector> cases = config.entropy_tuples;
  if (cases.empty()) {
    // Log-uniform variances over four decades.
    Rng rng(derive_seed(config.seed, {kStreamEntropyCases}));
    std::uniform_real_distribution<double> exponent(-2.0, 2.0);
    for (std::size_t c = 0; c < config.entropy_random_cases; ++c) {
      Vector vars(config.num_devices);
      for (double& v : vars) v = std::pow(10.0, exponent(rng));
      cases.push_back(std::move(vars));
    }
  }
  std::ostringstream csv;
  csv << "case,prior_var,sensing_vars,h_ml,h_mmse\n";
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const EntropyReport report = entropy_report(config.entropy_prior_var, cases[c]);
    csv << (c + 1) << ',' << format_number(config.entropy_prior_var, kMetricsDigits) << ','
        << join(cases[c], ' ') << ',' << format_number(report.h_ml, kMetricsDigits) << ','
        << format_number(report.h_mmse, kMetricsDigits) << '\n';
  }
  write_and_report(config.output_dir / "entropy_report.csv", csv.str(), out);
  return kExitOk;
}

int run_design_compare(ExperimentConfig config, Scheme scheme, std::ostream& out,
                       std::ostream& err) {
  std::vector<std::string> solvers;
  if (scheme == Scheme::kTdm) {
    config.scheme = Scheme::kTdm;
    // One shared sensing variance keeps the estimation variance homogeneous.
    if (config.sensing_vars.empty()) config.sensing_spread = 0.0;
    solvers = {"tdm_mse", "tdm_md"};
  } else {
    config.scheme = Scheme::kFdm;
    for (const auto& s : config.solvers) {
      if (s != kIdealSolver) solvers.push_back(s);
    }
  }
  const auto points = design_compare(config, solvers);
  std::ostringstream csv;
  csv << "sweep_value,solver,mse_mean,md_mean,excluded_trials\n";
  std::size_t worst = 0;
  for (const auto& p : points) {
    csv << format_number(p.sweep_value, kMetricsDigits) << ',' << p.solver << ','
        << format_number(p.mse_mean, kMetricsDigits) << ','
        << format_number(p.md_mean, kMetricsDigits) << ',' << p.excluded_trials << '\n';
    worst = std::max(worst, p.excluded_trials);
  }
  const std::string name = scheme == Scheme::kTdm ? "tdm_compare.csv" : "fdm_compare.csv";
  write_and_report(config.output_dir / name, csv.str(), out);
  return check_exclusions(static_cast<double>(worst) / static_cast<double>(config.trials), config, err);
}

int run_accuracy_sweep(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const SweepResult result = sweep(config);
  for (const auto& solver : config.solvers) {
    const auto metrics = config.output_dir / ("accuracy_" + solver + ".csv");
    export_records(result.records.at(solver), metrics,
                   config.output_dir / ("confusion_" + solver + ".csv"));
    out << "wrote " << metrics.string() << '\n';
  }
  return check_exclusions(result.worst_excluded_fraction, config, err);
}

int run_validate_solvers(const ValidationOptions& options, const std::filesystem::path& output,
                         std::ostream& out) {
  const auto results = validate_solvers(options);
  std::ostringstream csv;
  csv << "invariant,checked,failures,worst,tolerance\n";
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << r.checked << " checks, worst "
        << format_number(r.worst, 3) << ", tolerance " << format_number(r.tolerance, 3) << ")\n";
    csv << r.name << ',' << r.checked << ',' << r.failures << ','
        << format_number(r.worst, kMetricsDigits) << ',' << format_number(r.tolerance, kMetricsDigits)
        << '\n';
    all = all && r.passed();
  }
  write_and_report(output / "validate_solvers.csv", csv.str(), out);
  return all ? kExitOk : kExitValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo simulator for prior-aided sensing and over-the-air aggregation"};
  app.name("isea_sim");
  app.require_subcommand(1);

  CommonOptions opts;
  auto* estimators = app.add_subcommand("estimator-sweep", "Sensing MSE and accuracy per estimator over sensing SNR");
  auto* entropy = app.add_subcommand("entropy-report", "Aggregation entropy of ML and MMSE estimates");
  auto* tdm = app.add_subcommand("tdm-compare", "MSE and MD of the two TDM designs");
  auto* fdm = app.add_subcommand("fdm-compare", "MSE and MD of the FDM designs and baselines");
  auto* accuracy = app.add_subcommand("accuracy-sweep", "End-to-end classification accuracy sweep");
  auto* validate_cmd = app.add_subcommand("validate-solvers", "Check the solvers against the brute-force oracle");
  for (auto* sub : {estimators, entropy, tdm, fdm, accuracy}) add_common(sub, opts);

  ValidationOptions vopts;
  std::string voutput = "out";
  validate_cmd->add_option("-s,--seed", vopts.seed, "Seed of the random instances");
  validate_cmd->add_option("-n,--instances", vopts.instances, "Instances per check")->check(CLI::PositiveNumber);
  validate_cmd->add_option("-o,--output", voutput, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return run_validate_solvers(vopts, voutput, out);
    const ExperimentConfig config = resolve_config(opts);
    if (*estimators) return run_estimator_sweep(config, out);
    if (*entropy) return run_entropy_report(config, out);
    if (*tdm) return run_design_compare(config, Scheme::kTdm, out, err);
    if (*fdm) return run_design_compare(config, Scheme::kFdm, out, err);
    if (*accuracy) return run_accuracy_sweep(config, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace isea
