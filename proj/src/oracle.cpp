#include "isea/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "isea/errors.hpp"

namespace isea {

namespace {

// Maps unit-cube parameters to tx magnitudes: per device, the first parameter
// is the fraction of the budget spent and the remaining N - 1 break the stick
// across subcarriers.
void fill_tx(const FdmInstance& inst, const std::vector<double>& p, Matrix& tx) {
  const std::size_t columns = inst.gains.cols();
  for (std::size_t k = 0; k < inst.gains.rows(); ++k) {
    const double* q = p.data() + k * columns;
    double remaining = 1.0;
    for (std::size_t n = 0; n < columns; ++n) {
      const double share = n + 1 < columns ? remaining * q[n + 1] : remaining;
      remaining -= share;
      const double power = q[0] * inst.budgets[k] * std::max(share, 0.0);
      tx(k, n) = std::sqrt(power / inst.moments(k, n));
    }
  }
}

}  // namespace

SolveReport brute_force_oracle(const FdmInstance& inst, OracleObjective objective,
                               const OracleOptions& options) {
  validate(inst);
  const std::size_t dims = inst.gains.rows() * inst.gains.cols();
  if (dims > kOracleMaxCoefficients) {
    throw ValidationError("brute-force oracle handles at most " +
                          std::to_string(kOracleMaxCoefficients) + " coefficients, got " +
                          std::to_string(dims));
  }
  if (options.grid_resolution < 2) throw ValidationError("oracle grid needs at least 2 points");
  if (objective == OracleObjective::kMd && inst.delta.size() != inst.gains.cols()) {
    throw ValidationError("MD oracle needs a discriminative prior per subcarrier");
  }

  Matrix tx(inst.gains.rows(), inst.gains.cols());
  std::size_t evaluations = 0;
  auto score = [&](const std::vector<double>& p) {
    ++evaluations;
    fill_tx(inst, p, tx);
    if (objective == OracleObjective::kMse) return -total_mse_optimal_rx(inst, tx);
    return total_md(inst, {tx, Vector(inst.gains.cols(), 0.0), Scheme::kFdm});
  };

  const std::size_t g = options.grid_resolution;
  const double spacing = 1.0 / static_cast<double>(g - 1);
  std::vector<std::pair<double, std::vector<double>>> best;
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> p(dims);
  for (;;) {
    for (std::size_t d = 0; d < dims; ++d) p[d] = static_cast<double>(idx[d]) * spacing;
    const double s = score(p);
    if (best.size() < options.starts || s > best.back().first) {
      best.emplace_back(s, p);
      std::stable_sort(best.begin(), best.end(),
                       [](const auto& x, const auto& y) { return x.first > y.first; });
      if (best.size() > options.starts) best.pop_back();
    }
    std::size_t d = 0;
    while (d < dims && ++idx[d] == g) idx[d++] = 0;
    if (d == dims) break;
  }

  double best_score = best.front().first;
  std::vector<double> best_p = best.front().second;
  double final_step = spacing;
  for (auto& [start_score, point] : best) {
    double current = start_score;
    double step = spacing;
    for (std::size_t halving = 0; halving < options.refine_steps; ++halving) {
      for (std::size_t moves = 0; moves < 500; ++moves) {
        double move_score = current;
        std::vector<double> move_point;
        for (std::size_t d = 0; d < dims; ++d) {
          for (double sign : {-1.0, 1.0}) {
            std::vector<double> q = point;
            q[d] = std::clamp(q[d] + sign * step, 0.0, 1.0);
            if (q[d] == point[d]) continue;
            const double s = score(q);
            if (s > move_score) {
              move_score = s;
              move_point = std::move(q);
            }
          }
        }
        if (move_point.empty()) break;
        current = move_score;
        point = std::move(move_point);
      }
      step *= 0.5;
    }
    if (current > best_score) {
      best_score = current;
      best_p = point;
    }
    final_step = step;
  }

  SolveReport report;
  report.solver = objective == OracleObjective::kMse ? "oracle_mse" : "oracle_md";
  fill_tx(inst, best_p, tx);
  report.design = {tx, optimal_rx(inst.gains, tx, inst.est_vars, inst.noise_var), Scheme::kFdm};
  report.objective = objective == OracleObjective::kMse ? total_mse(inst, report.design)
                                                        : total_md(inst, report.design);
  report.iterations = evaluations;
  report.kkt_residual = final_step;
  return report;
}

}  // namespace isea
