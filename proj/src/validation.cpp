#include "isea/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "isea/oracle.hpp"
#include "isea/random.hpp"

namespace isea {

namespace {

constexpr double kNoiseVar = 0.1;

struct Tally {
  InvariantResult result;

  explicit Tally(std::string name, double tolerance) {
    result.name = std::move(name);
    result.tolerance = tolerance;
  }

  void record(double violation) {
    ++result.checked;
    if (!(violation <= result.tolerance)) ++result.failures;
    if (std::isnan(violation)) {
      result.worst = violation;
    } else if (!std::isnan(result.worst)) {
      result.worst = std::max(result.worst, violation);
    }
  }
};

double relative_gap(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

double max_power_excess(const FdmInstance& inst, const TransceiverDesign& design) {
  const Vector power = device_power(design, inst.moments);
  double worst = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    worst = std::max(worst, (power[k] - inst.budgets[k]) / inst.budgets[k]);
  }
  return worst;
}

}  // namespace

FdmInstance random_instance(std::size_t num_devices, std::size_t num_columns, double snr_db,
                            bool homogeneous, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.2, 2.0);
  std::exponential_distribution<double> power_gain(1.0);
  const double budget = std::pow(10.0, snr_db / 10.0) * kNoiseVar;
  FdmInstance inst{Matrix(num_devices, num_columns), Vector(num_devices),
                   Matrix(num_devices, num_columns), Matrix(num_devices, num_columns), kNoiseVar,
                   Vector(num_columns)};
  Vector shared(num_columns);
  for (double& v : shared) v = 0.3 * uniform(rng);
  for (std::size_t k = 0; k < num_devices; ++k) {
    inst.budgets[k] = budget * uniform(rng);
    for (std::size_t n = 0; n < num_columns; ++n) {
      inst.gains(k, n) = std::sqrt(power_gain(rng));
      inst.moments(k, n) = uniform(rng);
      inst.est_vars(k, n) = homogeneous ? shared[n] : 0.3 * uniform(rng);
    }
  }
  for (double& d : inst.delta) d = uniform(rng);
  return inst;
}

TdmInstance random_tdm_instance(std::size_t num_devices, double snr_db, std::uint64_t seed) {
  const FdmInstance f = random_instance(num_devices, 1, snr_db, true, seed);
  TdmInstance t;
  for (std::size_t k = 0; k < num_devices; ++k) {
    t.gains.push_back(f.gains(k, 0));
    t.budgets.push_back(f.budgets[k]);
    t.moments.push_back(f.moments(k, 0));
    t.est_vars.push_back(f.est_vars(k, 0));
  }
  t.noise_var = f.noise_var;
  t.delta = f.delta[0];
  return t;
}

DualOptions tight_dual_options() {
  DualOptions options;
  options.eps_lambda = 1e-12;
  options.eps_power = 1e-12;
  return options;
}

std::vector<InvariantResult> validate_solvers(const ValidationOptions& options) {
  const DualOptions dual = tight_dual_options();
  Tally tdm_mse_gap("tdm_mse_optimal matches oracle", options.objective_tolerance);
  Tally tdm_md_gap("tdm_md_optimal matches oracle", options.objective_tolerance);
  Tally fdm_mse_gap("fdm_mse_dual matches oracle", options.objective_tolerance);
  Tally fdm_md_gap("fdm_md_optimal matches oracle", options.objective_tolerance);
  Tally kkt("KKT residuals", options.kkt_tolerance);
  Tally power("power budgets respected", kPowerSlack);
  Tally equivalence("TDM designs give equal MSE and MD", options.equivalence_tolerance);
  Tally mse_order("FDM MSE(comp-opt) <= MSE(dec-opt)", options.dominance_tolerance);
  Tally md_order("FDM MD(dec-opt) >= MD(comp-opt)", options.dominance_tolerance);

  for (std::size_t i = 0; i < options.instances; ++i) {
    Rng shape(derive_seed(options.seed, {1, i}));
    const std::size_t devices = std::uniform_int_distribution<std::size_t>(1, 3)(shape);
    const std::size_t columns = std::uniform_int_distribution<std::size_t>(1, 2)(shape);
    const double snr = std::uniform_real_distribution<double>(-5.0, 25.0)(shape);

    const FdmInstance f = random_instance(devices, columns, snr, false, derive_seed(options.seed, {2, i}));
    const SolveReport mse = fdm_mse_dual(f, dual);
    const SolveReport md = fdm_md_optimal(f, dual);
    fdm_mse_gap.record(relative_gap(mse.objective, brute_force_oracle(f, OracleObjective::kMse).objective));
    fdm_md_gap.record(relative_gap(md.objective, brute_force_oracle(f, OracleObjective::kMd).objective));
    kkt.record(mse.kkt_residual);
    kkt.record(md.kkt_residual);
    power.record(max_power_excess(f, mse.design));
    power.record(max_power_excess(f, md.design));

    const TdmInstance t = random_tdm_instance(devices, snr, derive_seed(options.seed, {3, i}));
    const FdmInstance tf = as_fdm(t);
    const SolveReport tmse = tdm_mse_optimal(t);
    const SolveReport tmd = tdm_md_optimal(t);
    tdm_mse_gap.record(relative_gap(tmse.objective, brute_force_oracle(tf, OracleObjective::kMse).objective));
    tdm_md_gap.record(relative_gap(tmd.objective, brute_force_oracle(tf, OracleObjective::kMd).objective));
    kkt.record(tmse.kkt_residual);
    kkt.record(tmd.kkt_residual);
    power.record(max_power_excess(tf, tmse.design));
    power.record(max_power_excess(tf, tmd.design));
    equivalence.record(std::max(relative_gap(total_mse(tf, tmd.design), total_mse(tf, tmse.design)),
                                relative_gap(total_md(tf, tmd.design), total_md(tf, tmse.design))));
  }

  for (const double snr : {0.0, 10.0, 20.0}) {
    for (std::size_t i = 0; i < options.instances; ++i) {
      const FdmInstance f = random_instance(3, 4, snr, false,
                                            derive_seed(options.seed, {4, static_cast<std::uint64_t>(snr), i}));
      const SolveReport mse = fdm_mse_dual(f, dual);
      const SolveReport md = fdm_md_optimal(f, dual);
      const double mse_comp = total_mse(f, mse.design);
      const double mse_dec = total_mse(f, md.design);
      const double md_comp = total_md(f, mse.design);
      const double md_dec = total_md(f, md.design);
      mse_order.record((mse_comp - mse_dec) / mse_dec);
      md_order.record((md_comp - md_dec) / md_dec);
    }
  }

  return {tdm_mse_gap.result, tdm_md_gap.result, fdm_mse_gap.result, fdm_md_gap.result,
          kkt.result,         power.result,      equivalence.result, mse_order.result,
          md_order.result};
}

}  // namespace isea
