#include "isea/transceiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "isea/errors.hpp"
#include "isea/oracle.hpp"
#include "roots.hpp"

namespace isea {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(std::span<const double> values, const char* what, bool allow_zero) {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
      throw ValidationError(std::string(what) + (allow_zero ? " must be finite and nonnegative"
                                                            : " must be finite and positive"));
    }
  }
}

enum class Objective { kMse, kMd };

// Solves one subcarrier of the dual-decomposed problem for fixed multipliers.
// Returns a_n^2 (MSE) or z_n^2 (MD) and fills column n of `tx`.
double solve_column(const FdmInstance& inst, Objective objective, const Vector& lambda,
                    std::size_t n, double guess, Matrix& tx) {
  const std::size_t devices = inst.gains.rows();
  const double delta = objective == Objective::kMd ? inst.delta[n] : 1.0;
  if (delta == 0.0) {
    for (std::size_t k = 0; k < devices; ++k) tx(k, n) = 0.0;
    return 0.0;
  }
  bool has_free = false;
  for (std::size_t k = 0; k < devices; ++k) {
    if (lambda[k] == 0.0 && inst.gains(k, n) > 0.0) has_free = true;
  }

  double root = 0.0;
  if (objective == Objective::kMse) {
    auto lhs = [&](double r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < devices; ++k) {
        if (lambda[k] == 0.0) continue;
        const double s2 = inst.est_vars(k, n);
        const double w = lambda[k] * inst.moments(k, n);
        const double g = inst.gains(k, n) * inst.gains(k, n) * s2;
        const double d = r * g + w;
        acc += w * g * s2 / (d * d);
      }
      return acc - inst.noise_var;
    };
    root = detail::decreasing_root(lhs, guess);
  } else {
    const double target = inst.noise_var / delta;
    auto lhs = [&](double s) {
      double acc = 0.0;
      for (std::size_t k = 0; k < devices; ++k) {
        if (lambda[k] == 0.0) continue;
        const double h2 = inst.gains(k, n) * inst.gains(k, n);
        const double w = lambda[k] * inst.moments(k, n);
        const double d = w + delta * h2 * inst.est_vars(k, n) * s;
        acc += lambda[k] * h2 * inst.moments(k, n) / (d * d);
      }
      return acc - target;
    };
    root = detail::decreasing_root(lhs, guess);
  }

  if (root == 0.0) {
    // Unpriced devices would need unbounded amplitude to align.
    for (std::size_t k = 0; k < devices; ++k) {
      tx(k, n) = (has_free && lambda[k] == 0.0 && inst.gains(k, n) > 0.0) ? kInf : 0.0;
    }
    return 0.0;
  }
  const double amp = std::sqrt(root);
  for (std::size_t k = 0; k < devices; ++k) {
    const double h = inst.gains(k, n);
    const double s2 = inst.est_vars(k, n);
    const double w = lambda[k] * inst.moments(k, n);
    if (objective == Objective::kMse) {
      tx(k, n) = amp * h * s2 / (root * h * h * s2 + w);
    } else {
      tx(k, n) = delta * h * amp / (w + delta * s2 * h * h * root);
    }
    if (h == 0.0) tx(k, n) = 0.0;
  }
  return root;
}

void solve_all(const FdmInstance& inst, Objective objective, const Vector& lambda, Vector& aux,
               Matrix& tx) {
  for (std::size_t n = 0; n < inst.gains.cols(); ++n) {
    const double guess = aux[n] > 0.0 ? aux[n] : 1.0;
    aux[n] = solve_column(inst, objective, lambda, n, guess, tx);
  }
}

double row_power(const FdmInstance& inst, const Matrix& tx, std::size_t k) {
  double p = 0.0;
  for (std::size_t n = 0; n < tx.cols(); ++n) p += tx(k, n) * tx(k, n) * inst.moments(k, n);
  return p;
}

double md_aux(const FdmInstance& inst, const Matrix& tx, std::size_t n) {
  double amplitude = 0.0;
  double denom = inst.noise_var;
  for (std::size_t k = 0; k < tx.rows(); ++k) {
    const double c = inst.gains(k, n) * tx(k, n);
    amplitude += c;
    denom += c * c * inst.est_vars(k, n);
  }
  return denom > 0.0 ? amplitude / denom : 0.0;
}

// Largest deviation of the design from the per-entry stationarity conditions,
// in units of each entry's full-power amplitude.
double stationarity_residual(const FdmInstance& inst, Objective objective, const Vector& lambda,
                             const TransceiverDesign& design) {
  double worst = 0.0;
  for (std::size_t n = 0; n < inst.gains.cols(); ++n) {
    const double a = design.rx[n];
    const double z = md_aux(inst, design.tx, n);
    const double delta = objective == Objective::kMd ? inst.delta[n] : 1.0;
    for (std::size_t k = 0; k < inst.gains.rows(); ++k) {
      const double h = inst.gains(k, n);
      const double s2 = inst.est_vars(k, n);
      const double w = lambda[k] * inst.moments(k, n);
      double target = 0.0;
      if (objective == Objective::kMse) {
        const double d = a * a * h * h * s2 + w;
        if (d == 0.0) continue;
        target = a * h * s2 / d;
      } else {
        const double d = w + delta * s2 * h * h * z * z;
        if (delta == 0.0) {
          target = 0.0;
        } else if (d == 0.0) {
          continue;
        } else {
          target = delta * h * z / d;
        }
      }
      const double scale = std::sqrt(inst.budgets[k] / inst.moments(k, n));
      worst = std::max(worst, std::abs(design.tx(k, n) - target) / scale);
    }
  }
  return worst;
}

SolveReport dual_solve(const FdmInstance& inst, Objective objective, const DualOptions& options) {
  validate(inst);
  if (!(options.eps_lambda > 0.0) || !(options.eps_power > 0.0) || options.max_iters == 0) {
    throw ValidationError("dual tolerances and iteration cap must be positive");
  }
  const std::size_t devices = inst.gains.rows();
  const std::size_t columns = inst.gains.cols();
  Vector lambda(devices, 1.0);
  Vector aux(columns, 1.0);
  Matrix tx(devices, columns);
  SolveReport report;
  report.solver = objective == Objective::kMse ? "fdm_mse" : "fdm_md";
  report.converged = false;

  auto violation = [&](const Matrix& design_tx) {
    double worst = 0.0;
    for (std::size_t k = 0; k < devices; ++k) {
      worst = std::max(worst, (row_power(inst, design_tx, k) - inst.budgets[k]) / inst.budgets[k]);
    }
    return worst;
  };

  if (options.update == DualUpdate::kCoordinate) {
    solve_all(inst, objective, lambda, aux, tx);
    for (std::size_t sweep = 1; sweep <= options.max_iters; ++sweep) {
      double change = 0.0;
      for (std::size_t k = 0; k < devices; ++k) {
        const double old = lambda[k];
        Vector trial_aux = aux;
        Matrix trial_tx(devices, columns);
        auto excess = [&](double value) {
          lambda[k] = value;
          solve_all(inst, objective, lambda, trial_aux, trial_tx);
          return row_power(inst, trial_tx, k) - inst.budgets[k];
        };
        double updated = 0.0;
        if (excess(0.0) > 0.0) {
          updated = detail::positive_root(excess, old > 0.0 ? old : 1.0);
        }
        lambda[k] = updated;
        solve_all(inst, objective, lambda, aux, tx);
        change = std::max(change, std::abs(updated - old) / std::max(1.0, old));
      }
      report.iterations = sweep;
      if (change <= options.eps_lambda && violation(tx) <= options.eps_power) {
        report.converged = true;
        break;
      }
    }
  } else {
    for (std::size_t t = 1; t <= options.max_iters; ++t) {
      solve_all(inst, objective, lambda, aux, tx);
      const double step = options.step / std::sqrt(static_cast<double>(t));
      double change = 0.0;
      for (std::size_t k = 0; k < devices; ++k) {
        double g = row_power(inst, tx, k) - inst.budgets[k];
        g = std::min(g, 1e6 * inst.budgets[k]);
        const double next = std::max(0.0, lambda[k] + step * g);
        change = std::max(change, std::abs(next - lambda[k]));
        lambda[k] = next;
      }
      report.iterations = t;
      if (change <= options.eps_lambda && violation(tx) <= options.eps_power) {
        report.converged = true;
        break;
      }
    }
    solve_all(inst, objective, lambda, aux, tx);
  }

  // Stationarity of the auxiliary variable before any rescaling.
  double consistency = 0.0;
  if (objective == Objective::kMd) {
    for (std::size_t n = 0; n < columns; ++n) {
      const double z = std::sqrt(aux[n]);
      const double z_design = md_aux(inst, tx, n);
      if (std::isfinite(z_design) && std::max(z, z_design) > 0.0) {
        consistency = std::max(consistency, std::abs(z - z_design) / std::max(z, z_design));
      }
    }
  }

  report.power_violation.resize(devices);
  for (std::size_t k = 0; k < devices; ++k) {
    double power = row_power(inst, tx, k);
    report.power_violation[k] = (power - inst.budgets[k]) / inst.budgets[k];
    if (!std::isfinite(power)) {
      for (std::size_t n = 0; n < columns; ++n) {
        if (!std::isfinite(tx(k, n))) tx(k, n) = std::sqrt(inst.budgets[k] / inst.moments(k, n));
      }
      power = row_power(inst, tx, k);
    }
    if (power > inst.budgets[k]) {
      const double scale = std::sqrt(inst.budgets[k] / power);
      for (std::size_t n = 0; n < columns; ++n) tx(k, n) *= scale;
    }
  }

  report.design = {tx, optimal_rx(inst.gains, tx, inst.est_vars, inst.noise_var), Scheme::kFdm};
  report.duals = lambda;
  report.objective = objective == Objective::kMse ? total_mse(inst, report.design)
                                                  : total_md(inst, report.design);
  double slackness = 0.0;
  double primal = 0.0;
  for (std::size_t k = 0; k < devices; ++k) {
    const double gap = (row_power(inst, tx, k) - inst.budgets[k]) / inst.budgets[k];
    slackness = std::max(slackness, lambda[k] * std::abs(gap));
    primal = std::max(primal, gap);
  }
  report.kkt_residual = std::max({stationarity_residual(inst, objective, lambda, report.design),
                                  slackness, primal, consistency});
  return report;
}

std::size_t count_saturated(const Vector& u, double a) {
  std::size_t n = 0;
  for (double v : u) {
    if (a * v <= 1.0) ++n;
  }
  return n;
}

double md_of_amplitudes(const Vector& c, double est_var, double noise_var, double delta) {
  const double sum = std::accumulate(c.begin(), c.end(), 0.0);
  double sq = 0.0;
  for (double v : c) sq += v * v;
  const double denom = est_var * sq + noise_var;
  if (sum == 0.0 || delta == 0.0) return 0.0;
  return delta * sum * sum / denom;
}

TdmInstance column_instance(const FdmInstance& inst, std::size_t n) {
  TdmInstance slot;
  slot.gains = inst.gains.column(n);
  slot.budgets = inst.budgets;
  slot.moments = inst.moments.column(n);
  slot.est_vars = inst.est_vars.column(n);
  slot.noise_var = inst.noise_var;
  slot.delta = inst.delta.empty() ? 0.0 : inst.delta[n];
  return slot;
}

}  // namespace

void validate(const TdmInstance& inst) {
  const std::size_t devices = inst.gains.size();
  if (devices == 0) throw ValidationError("TDM instance needs at least one device");
  if (inst.budgets.size() != devices || inst.moments.size() != devices ||
      inst.est_vars.size() != devices) {
    throw ValidationError("TDM instance vectors must all have one entry per device");
  }
  require_positive(inst.gains, "channel gains", true);
  require_positive(inst.budgets, "power budgets", false);
  require_positive(inst.moments, "second moments", false);
  require_positive(inst.est_vars, "estimation variances", false);
  if (!std::isfinite(inst.noise_var) || inst.noise_var < 0.0) {
    throw ValidationError("noise variance must be finite and nonnegative");
  }
  if (!std::isfinite(inst.delta) || inst.delta < 0.0) {
    throw ValidationError("discriminative prior must be finite and nonnegative");
  }
}

void validate(const FdmInstance& inst) {
  const std::size_t devices = inst.gains.rows();
  const std::size_t columns = inst.gains.cols();
  if (devices == 0 || columns == 0) throw ValidationError("FDM instance is empty");
  if (inst.budgets.size() != devices || inst.moments.rows() != devices ||
      inst.moments.cols() != columns || inst.est_vars.rows() != devices ||
      inst.est_vars.cols() != columns) {
    throw ValidationError("FDM instance matrices must be devices x subcarriers");
  }
  if (!inst.delta.empty() && inst.delta.size() != columns) {
    throw ValidationError("discriminative prior needs one entry per subcarrier");
  }
  require_positive(inst.gains.data(), "channel gains", true);
  require_positive(inst.budgets, "power budgets", false);
  require_positive(inst.moments.data(), "second moments", false);
  require_positive(inst.est_vars.data(), "estimation variances", false);
  require_positive(inst.delta, "discriminative prior", true);
  if (!std::isfinite(inst.noise_var) || !(inst.noise_var > 0.0)) {
    throw ValidationError("FDM noise variance must be finite and positive");
  }
}

FdmInstance as_fdm(const TdmInstance& inst) {
  const std::size_t devices = inst.gains.size();
  FdmInstance out{Matrix(devices, 1), inst.budgets, Matrix(devices, 1), Matrix(devices, 1),
                  inst.noise_var, Vector{inst.delta}};
  for (std::size_t k = 0; k < devices; ++k) {
    out.gains(k, 0) = inst.gains[k];
    out.moments(k, 0) = inst.moments[k];
    out.est_vars(k, 0) = inst.est_vars[k];
  }
  return out;
}

ChannelRealization channel_of(const FdmInstance& inst, Scheme scheme) {
  return {inst.gains, inst.noise_var, scheme};
}

SolverKind parse_solver(std::string_view name) {
  if (name == "tdm_mse") return SolverKind::kTdmMse;
  if (name == "tdm_md") return SolverKind::kTdmMd;
  if (name == "fdm_mse") return SolverKind::kFdmMse;
  if (name == "fdm_md") return SolverKind::kFdmMd;
  if (name == "equal") return SolverKind::kEqual;
  if (name == "channel_inversion") return SolverKind::kChannelInversion;
  throw ValidationError("unknown solver '" + std::string(name) + "'");
}

std::string_view solver_name(SolverKind kind) noexcept {
  switch (kind) {
    case SolverKind::kTdmMse: return "tdm_mse";
    case SolverKind::kTdmMd: return "tdm_md";
    case SolverKind::kFdmMse: return "fdm_mse";
    case SolverKind::kFdmMd: return "fdm_md";
    case SolverKind::kEqual: return "equal";
    case SolverKind::kChannelInversion: return "channel_inversion";
  }
  return "?";
}

DualUpdate parse_dual_update(std::string_view name) {
  if (name == "subgradient") return DualUpdate::kSubgradient;
  if (name == "coordinate") return DualUpdate::kCoordinate;
  throw ValidationError("unknown dual update '" + std::string(name) +
                        "' (expected subgradient or coordinate)");
}

std::string_view dual_update_name(DualUpdate update) noexcept {
  return update == DualUpdate::kSubgradient ? "subgradient" : "coordinate";
}

std::string to_json(const SolveReport& report) {
  nlohmann::ordered_json j;
  j["solver"] = report.solver;
  j["scheme"] = std::string(scheme_name(report.design.scheme));
  j["objective"] = report.objective;
  j["iterations"] = report.iterations;
  j["kkt_residual"] = report.kkt_residual;
  j["converged"] = report.converged;
  if (report.threshold_index) j["threshold_index"] = *report.threshold_index;
  if (report.tau) j["tau"] = *report.tau;
  if (!report.duals.empty()) j["duals"] = report.duals;
  if (!report.power_violation.empty()) j["power_violation"] = report.power_violation;
  j["tx"] = report.design.tx.to_rows();
  j["rx"] = report.design.rx;
  return j.dump(2);
}

Vector optimal_rx(const Matrix& gains, const Matrix& tx, const Matrix& est_vars,
                  double noise_var) {
  Vector rx(gains.cols(), 0.0);
  for (std::size_t n = 0; n < gains.cols(); ++n) {
    double num = 0.0;
    double den = noise_var;
    for (std::size_t k = 0; k < gains.rows(); ++k) {
      const double c = gains(k, n) * tx(k, n);
      num += c * est_vars(k, n);
      den += c * c * est_vars(k, n);
    }
    rx[n] = den > 0.0 ? num / den : 0.0;
  }
  return rx;
}

double total_mse(const FdmInstance& inst, const TransceiverDesign& design) {
  const Vector per = analytic_mse(channel_of(inst, design.scheme), design, inst.est_vars);
  return std::accumulate(per.begin(), per.end(), 0.0);
}

double total_md(const FdmInstance& inst, const TransceiverDesign& design) {
  const Vector delta = inst.delta.empty() ? Vector(inst.gains.cols(), 0.0) : inst.delta;
  const Vector per = received_md(channel_of(inst, design.scheme), design, inst.est_vars, delta);
  return std::accumulate(per.begin(), per.end(), 0.0);
}

double total_mse_optimal_rx(const FdmInstance& inst, const Matrix& tx) {
  double total = 0.0;
  for (std::size_t n = 0; n < inst.gains.cols(); ++n) {
    double base = 0.0;
    double num = 0.0;
    double den = inst.noise_var;
    for (std::size_t k = 0; k < inst.gains.rows(); ++k) {
      const double s2 = inst.est_vars(k, n);
      const double c = inst.gains(k, n) * tx(k, n);
      base += s2;
      num += c * s2;
      den += c * c * s2;
    }
    total += base - (den > 0.0 ? num * num / den : 0.0);
  }
  return total;
}

SolveReport tdm_mse_optimal(const TdmInstance& inst) {
  validate(inst);
  const std::size_t devices = inst.gains.size();
  Vector u(devices);
  for (std::size_t k = 0; k < devices; ++k) {
    u[k] = inst.gains[k] * std::sqrt(inst.budgets[k] / inst.moments[k]);
  }
  std::vector<std::size_t> order(devices);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return u[i] < u[j]; });

  auto mse_at = [&](double a) {
    double acc = a * a * inst.noise_var;
    for (std::size_t k = 0; k < devices; ++k) {
      const double gap = std::max(0.0, 1.0 - a * u[k]);
      acc += gap * gap * inst.est_vars[k];
    }
    return acc;
  };

  // Each candidate is the stationary point of MSE(a) on the piece where the
  // first j devices (weakest links) saturate.
  double best_a = 0.0;
  double best_mse = kInf;
  double num = 0.0;
  double den = inst.noise_var;
  for (std::size_t j = 0; j < devices; ++j) {
    const std::size_t k = order[j];
    num += u[k] * inst.est_vars[k];
    den += u[k] * u[k] * inst.est_vars[k];
    if (!(den > 0.0)) continue;
    const double a = num / den;
    const double value = mse_at(a);
    if (value < best_mse) {
      best_mse = value;
      best_a = a;
    }
  }

  SolveReport report;
  report.solver = "tdm_mse";
  TransceiverDesign design{Matrix(devices, 1), Vector{best_a}, Scheme::kTdm};
  for (std::size_t k = 0; k < devices; ++k) {
    const double cap = std::sqrt(inst.budgets[k] / inst.moments[k]);
    const double invert = (best_a > 0.0 && inst.gains[k] > 0.0)
                              ? 1.0 / (best_a * inst.gains[k])
                              : kInf;
    design.tx(k, 0) = std::min(cap, invert);
  }
  report.design = design;
  report.objective = best_mse;
  report.iterations = devices;
  report.threshold_index = count_saturated(u, best_a);
  const FdmInstance as_one = as_fdm(inst);
  const double a49 = optimal_rx(as_one.gains, design.tx, as_one.est_vars, inst.noise_var)[0];
  report.kkt_residual = best_a > 0.0 ? std::abs(best_a - a49) / best_a : 0.0;
  return report;
}

SolveReport tdm_md_optimal(const TdmInstance& inst) {
  validate(inst);
  const std::size_t devices = inst.gains.size();
  const double est_var = inst.est_vars.front();
  for (double v : inst.est_vars) {
    if (std::abs(v - est_var) > 1e-12 * est_var) {
      throw UnsupportedInstance(
          "closed-form TDM MD design needs a common estimation variance across devices; "
          "use the brute-force oracle for heterogeneous instances");
    }
  }
  SolveReport report;
  report.solver = "tdm_md";
  report.design = {Matrix(devices, 1), Vector{0.0}, Scheme::kTdm};
  if (inst.delta == 0.0) {
    report.tau = 0.0;
    return report;
  }

  Vector u(devices);
  for (std::size_t k = 0; k < devices; ++k) {
    u[k] = inst.gains[k] * std::sqrt(inst.budgets[k] / inst.moments[k]);
  }
  Vector sorted = u;
  std::sort(sorted.begin(), sorted.end());
  const double noise_eq = inst.noise_var / est_var;

  auto capped = [&](double tau) {
    Vector c(devices);
    for (std::size_t k = 0; k < devices; ++k) c[k] = std::min(u[k], tau);
    return c;
  };

  double best_tau = sorted.front();
  double best = -1.0;
  double sum_u = 0.0;
  double sum_u2 = 0.0;
  for (std::size_t j = 0; j < devices; ++j) {
    if (j > 0) {
      sum_u += sorted[j - 1];
      sum_u2 += sorted[j - 1] * sorted[j - 1];
    }
    const double lo = j == 0 ? 0.0 : sorted[j - 1];
    const double hi = sorted[j];
    const double stationary = sum_u > 0.0 ? (sum_u2 + noise_eq) / sum_u : kInf;
    const double tau = std::clamp(stationary, lo, hi);
    const double value = md_of_amplitudes(capped(tau), est_var, inst.noise_var, inst.delta);
    if (value > best || (value == best && tau < best_tau)) {
      best = value;
      best_tau = tau;
    }
  }

  const Vector c = capped(best_tau);
  for (std::size_t k = 0; k < devices; ++k) {
    report.design.tx(k, 0) = inst.gains[k] > 0.0 ? c[k] / inst.gains[k] : 0.0;
  }
  const FdmInstance as_one = as_fdm(inst);
  report.design.rx = optimal_rx(as_one.gains, report.design.tx, as_one.est_vars, inst.noise_var);
  report.objective = best;
  report.iterations = devices;
  report.tau = best_tau;

  const double sum_c = std::accumulate(c.begin(), c.end(), 0.0);
  double sum_c2 = 0.0;
  for (double v : c) sum_c2 += v * v;
  const double z = sum_c / (est_var * sum_c2 + inst.noise_var);
  double residual = 0.0;
  for (std::size_t k = 0; k < devices; ++k) {
    if (u[k] == 0.0) continue;
    const double slope = 1.0 - z * est_var * c[k];
    residual = std::max(residual, c[k] < u[k] ? std::abs(slope) : std::max(0.0, -slope));
  }
  report.kkt_residual = residual;
  return report;
}

SolveReport fdm_mse_dual(const FdmInstance& inst, const DualOptions& options) {
  return dual_solve(inst, Objective::kMse, options);
}

SolveReport fdm_md_optimal(const FdmInstance& inst, const DualOptions& options) {
  if (inst.delta.size() != inst.gains.cols()) {
    throw ValidationError("MD design needs a discriminative prior per subcarrier");
  }
  return dual_solve(inst, Objective::kMd, options);
}

TransceiverDesign baseline_equal(const FdmInstance& inst) {
  validate(inst);
  const double columns = static_cast<double>(inst.gains.cols());
  TransceiverDesign design{Matrix(inst.gains.rows(), inst.gains.cols()), {}, Scheme::kFdm};
  for (std::size_t k = 0; k < inst.gains.rows(); ++k) {
    for (std::size_t n = 0; n < inst.gains.cols(); ++n) {
      design.tx(k, n) = std::sqrt(inst.budgets[k] / (columns * inst.moments(k, n)));
    }
  }
  design.rx = optimal_rx(inst.gains, design.tx, inst.est_vars, inst.noise_var);
  return design;
}

TransceiverDesign baseline_channel_inversion(const FdmInstance& inst) {
  TransceiverDesign design = baseline_equal(inst);
  for (std::size_t k = 0; k < inst.gains.rows(); ++k) {
    for (std::size_t n = 0; n < inst.gains.cols(); ++n) {
      if (inst.gains(k, n) > 0.0) {
        design.tx(k, n) = std::min(design.tx(k, n), 1.0 / inst.gains(k, n));
      }
    }
  }
  design.rx = optimal_rx(inst.gains, design.tx, inst.est_vars, inst.noise_var);
  return design;
}

SolveReport solve(SolverKind kind, const FdmInstance& inst, Scheme scheme,
                  const DualOptions& options) {
  switch (kind) {
    case SolverKind::kFdmMse: return fdm_mse_dual(inst, options);
    case SolverKind::kFdmMd: return fdm_md_optimal(inst, options);
    case SolverKind::kEqual:
    case SolverKind::kChannelInversion: {
      if (scheme == Scheme::kTdm) break;
      SolveReport report;
      report.solver = std::string(solver_name(kind));
      report.design = kind == SolverKind::kEqual ? baseline_equal(inst)
                                                 : baseline_channel_inversion(inst);
      report.objective = total_mse(inst, report.design);
      return report;
    }
    case SolverKind::kTdmMse:
    case SolverKind::kTdmMd: break;
  }

  // TDM: every slot is an independent single-slot problem with its own budget.
  validate(inst);
  const std::size_t devices = inst.gains.rows();
  const std::size_t slots = inst.gains.cols();
  SolveReport report;
  report.solver = std::string(solver_name(kind));
  report.design = {Matrix(devices, slots), Vector(slots), Scheme::kTdm};
  for (std::size_t n = 0; n < slots; ++n) {
    const TdmInstance slot = column_instance(inst, n);
    SolveReport part;
    if (kind == SolverKind::kTdmMse) {
      part = tdm_mse_optimal(slot);
    } else if (kind == SolverKind::kEqual || kind == SolverKind::kChannelInversion) {
      const FdmInstance one = as_fdm(slot);
      part.design = kind == SolverKind::kEqual ? baseline_equal(one)
                                               : baseline_channel_inversion(one);
      part.objective = total_mse(one, part.design);
    } else {
      try {
        part = tdm_md_optimal(slot);
      } catch (const UnsupportedInstance&) {
        part = brute_force_oracle(as_fdm(slot), OracleObjective::kMd);
      }
    }
    for (std::size_t k = 0; k < devices; ++k) report.design.tx(k, n) = part.design.tx(k, 0);
    report.design.rx[n] = part.design.rx[0];
    report.objective += part.objective;
    report.iterations += part.iterations;
    report.kkt_residual = std::max(report.kkt_residual, part.kkt_residual);
    report.converged = report.converged && part.converged;
  }
  return report;
}

}  // namespace isea
