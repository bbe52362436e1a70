#include "isea/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "isea/errors.hpp"
#include "isea/export.hpp"

namespace isea {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

GaussianMixturePrior parse_prior(const json& j, const std::filesystem::path& base_dir) {
  const std::string type = j.value("type", "synthetic");
  if (type == "synthetic") {
    reject_unknown(j, {"type", "L", "M", "min_md", "seed"}, "prior");
    return make_synthetic_prior(j.value("L", std::size_t{5}), j.value("M", std::size_t{4}),
                                j.value("min_md", 4.0), j.value("seed", std::uint64_t{1}));
  }
  if (type == "inline") {
    json copy = j;
    copy.erase("type");
    return prior_from_json(copy.dump());
  }
  if (type == "file") {
    reject_unknown(j, {"type", "path"}, "prior");
    return prior_from_json(read_file(base_dir / j.at("path").get<std::string>()));
  }
  if (type == "fit") {
    reject_unknown(j, {"type", "samples", "L"}, "prior");
    std::istringstream in(read_file(base_dir / j.at("samples").get<std::string>()));
    const auto samples = read_samples_csv(in);
    return fit_from_samples(samples, j.at("L").get<std::size_t>());
  }
  throw ValidationError("unknown prior type '" + type + "' (expected synthetic, inline, file or fit)");
}

}  // namespace

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "comm_snr") return SweepVariable::kCommSnr;
  if (name == "sensing_snr") return SweepVariable::kSensingSnr;
  if (name == "K") return SweepVariable::kDevices;
  if (name == "N") return SweepVariable::kSubcarriers;
  throw ValidationError("unknown sweep variable '" + std::string(name) +
                        "' (expected comm_snr, sensing_snr, K or N)");
}

std::string_view sweep_variable_name(SweepVariable variable) noexcept {
  switch (variable) {
    case SweepVariable::kCommSnr: return "comm_snr";
    case SweepVariable::kSensingSnr: return "sensing_snr";
    case SweepVariable::kDevices: return "K";
    case SweepVariable::kSubcarriers: return "N";
  }
  return "?";
}

VarianceModel parse_variance_model(std::string_view name) {
  if (name == "within_class") return VarianceModel::kWithinClass;
  if (name == "posterior") return VarianceModel::kPosterior;
  throw ValidationError("unknown variance model '" + std::string(name) +
                        "' (expected within_class or posterior)");
}

std::string_view variance_model_name(VarianceModel model) noexcept {
  return model == VarianceModel::kWithinClass ? "within_class" : "posterior";
}

double budget_for_snr(double comm_snr_db, double noise_var) {
  return std::pow(10.0, comm_snr_db / 10.0) * noise_var;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    reject_unknown(j,
                   {"prior", "K", "N", "scheme", "estimator", "estimators", "solvers",
                    "sensing_snr_db", "sensing_vars", "sensing_spread", "comm_snr_db",
                    "noise_var", "channel_scale", "sweep", "trials", "samples_per_trial", "seed",
                    "calibration_samples", "variance_model", "eps_lambda", "eps_power",
                    "max_iters", "dual_update", "dual_step", "max_excluded_fraction", "entropy",
                    "output"},
                   "config");
    if (j.contains("prior")) c.prior = parse_prior(j.at("prior"), base_dir);
    c.num_devices = j.value("K", c.num_devices);
    c.num_subcarriers = j.value("N", c.prior.feature_dim());
    if (j.contains("scheme")) c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (j.contains("estimator")) c.estimator = parse_estimator(j.at("estimator").get<std::string>());
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j.at("estimators")) c.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("solvers")) c.solvers = j.at("solvers").get<std::vector<std::string>>();
    c.sensing_snr_db = j.value("sensing_snr_db", c.sensing_snr_db);
    if (j.contains("sensing_vars")) c.sensing_vars = j.at("sensing_vars").get<Vector>();
    c.sensing_spread = j.value("sensing_spread", c.sensing_spread);
    c.comm_snr_db = j.value("comm_snr_db", c.comm_snr_db);
    c.noise_var = j.value("noise_var", c.noise_var);
    c.channel_scale = j.value("channel_scale", c.channel_scale);
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      reject_unknown(s, {"variable", "values"}, "sweep");
      c.sweep = parse_sweep_variable(s.value("variable", std::string("comm_snr")));
      c.sweep_values = s.at("values").get<Vector>();
    }
    c.trials = j.value("trials", c.trials);
    c.samples_per_trial = j.value("samples_per_trial", c.samples_per_trial);
    c.seed = j.value("seed", c.seed);
    c.calibration_samples = j.value("calibration_samples", c.calibration_samples);
    if (j.contains("variance_model")) {
      c.variance_model = parse_variance_model(j.at("variance_model").get<std::string>());
    }
    c.dual.eps_lambda = j.value("eps_lambda", c.dual.eps_lambda);
    c.dual.eps_power = j.value("eps_power", c.dual.eps_power);
    c.dual.max_iters = j.value("max_iters", c.dual.max_iters);
    c.dual.step = j.value("dual_step", c.dual.step);
    if (j.contains("dual_update")) {
      c.dual.update = parse_dual_update(j.at("dual_update").get<std::string>());
    }
    c.max_excluded_fraction = j.value("max_excluded_fraction", c.max_excluded_fraction);
    if (j.contains("entropy")) {
      const json& e = j.at("entropy");
      reject_unknown(e, {"prior_var", "tuples", "random_cases"}, "entropy");
      c.entropy_prior_var = e.value("prior_var", c.entropy_prior_var);
      if (e.contains("tuples")) c.entropy_tuples = e.at("tuples").get<std::vector<Vector>>();
      c.entropy_random_cases = e.value("random_cases", c.entropy_random_cases);
    }
    if (j.contains("output")) c.output_dir = j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw IoError("cannot read config '" + path.string() + "'");
  probe.close();
  return parse_config(read_file(path), path.parent_path());
}

void validate(const ExperimentConfig& c) {
  const std::size_t dim = c.prior.feature_dim();
  if (c.num_devices == 0) throw ValidationError("K must be at least 1");
  if (c.trials == 0) throw ValidationError("trials must be at least 1");
  if (c.samples_per_trial == 0) throw ValidationError("samples_per_trial must be at least 1");
  if (c.calibration_samples < 2) throw ValidationError("calibration_samples must be at least 2");
  if (c.scheme == Scheme::kFdm && c.num_subcarriers < dim) {
    throw ValidationError("FDM needs N >= M (N = " + std::to_string(c.num_subcarriers) +
                          ", M = " + std::to_string(dim) + ")");
  }
  if (!(c.noise_var > 0.0) || !std::isfinite(c.noise_var)) {
    throw ValidationError("noise_var must be finite and positive");
  }
  if (!(c.channel_scale > 0.0)) throw ValidationError("channel_scale must be positive");
  if (!(c.sensing_spread >= 0.0 && c.sensing_spread < 1.0)) {
    throw ValidationError("sensing_spread must lie in [0, 1)");
  }
  if (!c.sensing_vars.empty() && c.sensing_vars.size() != c.num_devices &&
      c.sweep != SweepVariable::kDevices) {
    throw ValidationError("sensing_vars needs one entry per device");
  }
  for (double v : c.sensing_vars) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("sensing_vars must be finite and nonnegative");
    }
  }
  if (c.sweep_values.empty()) throw ValidationError("sweep values must be nonempty");
  for (double v : c.sweep_values) {
    if (!std::isfinite(v)) throw ValidationError("sweep values must be finite");
    if (c.sweep == SweepVariable::kDevices || c.sweep == SweepVariable::kSubcarriers) {
      if (v < 1.0 || v != std::floor(v)) {
        throw ValidationError("K and N sweep values must be positive integers");
      }
      if (c.sweep == SweepVariable::kSubcarriers && c.scheme == Scheme::kFdm && v < dim) {
        throw ValidationError("N sweep values must be at least M");
      }
    }
  }
  for (const auto& s : c.solvers) {
    if (s != kIdealSolver) parse_solver(s);
  }
  if (c.estimators.empty()) throw ValidationError("estimators must be nonempty");
  if (!(c.max_excluded_fraction >= 0.0 && c.max_excluded_fraction <= 1.0)) {
    throw ValidationError("max_excluded_fraction must lie in [0, 1]");
  }
  if (!(c.dual.eps_lambda > 0.0) || !(c.dual.eps_power > 0.0) || c.dual.max_iters == 0 ||
      !(c.dual.step > 0.0)) {
    throw ValidationError("dual tolerances, step and max_iters must be positive");
  }
}

}  // namespace isea
