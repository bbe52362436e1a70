#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "isea/aircomp.hpp"
#include "isea/linalg.hpp"

namespace isea {

/// One TDM slot: a quasi-static channel shared by every slot, so each slot
/// is solved on its own under a per-slot power budget.
struct TdmInstance {
  Vector gains;     // |h_k|
  Vector budgets;   // P_k
  Vector moments;   // nu_k^2
  Vector est_vars;  // sigma_hat_k^2
  double noise_var = 0.1;
  double delta = 0.0;
};

struct FdmInstance {
  Matrix gains;     // K x N
  Vector budgets;   // P_k, shared by all subcarriers of device k
  Matrix moments;   // K x N
  Matrix est_vars;  // K x N
  double noise_var = 0.1;
  Vector delta;     // length N
};

void validate(const TdmInstance& inst);
void validate(const FdmInstance& inst);

/// The same problem seen as a one-subcarrier FDM instance.
FdmInstance as_fdm(const TdmInstance& inst);
ChannelRealization channel_of(const FdmInstance& inst, Scheme scheme = Scheme::kFdm);

enum class SolverKind { kTdmMse, kTdmMd, kFdmMse, kFdmMd, kEqual, kChannelInversion };

SolverKind parse_solver(std::string_view name);
std::string_view solver_name(SolverKind kind) noexcept;

enum class DualUpdate {
  /// Projected subgradient with step c / sqrt(t).
  kSubgradient,
  /// Exact maximization of the dual along one multiplier at a time.
  kCoordinate,
};

DualUpdate parse_dual_update(std::string_view name);
std::string_view dual_update_name(DualUpdate update) noexcept;

struct DualOptions {
  double eps_lambda = 1e-6;
  double eps_power = 1e-4;
  std::size_t max_iters = 5000;
  double step = 0.1;
  DualUpdate update = DualUpdate::kCoordinate;
};

struct SolveReport {
  std::string solver;
  TransceiverDesign design;
  /// Total MSE for MSE solvers and baselines, total MD for MD solvers.
  double objective = 0.0;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  bool converged = true;
  /// TDM MSE: number of devices at full power.
  std::optional<std::size_t> threshold_index;
  /// TDM MD: common effective amplitude cap.
  std::optional<double> tau;
  Vector duals;
  /// (power_k - P_k) / P_k before the final feasibility rescale.
  Vector power_violation;
};

std::string to_json(const SolveReport& report);

/// Per-column receive magnitude minimizing the AirComp MSE for a fixed tx.
Vector optimal_rx(const Matrix& gains, const Matrix& tx, const Matrix& est_vars, double noise_var);

/// Total AirComp MSE (sum over columns) of a design on an instance.
double total_mse(const FdmInstance& inst, const TransceiverDesign& design);
/// Total received MD (sum over columns).
double total_md(const FdmInstance& inst, const TransceiverDesign& design);
/// Total MSE with every column's rx set by optimal_rx.
double total_mse_optimal_rx(const FdmInstance& inst, const Matrix& tx);

SolveReport tdm_mse_optimal(const TdmInstance& inst);

/// Requires a common sigma_hat^2 across devices; throws UnsupportedInstance
/// otherwise (use brute_force_oracle there).
SolveReport tdm_md_optimal(const TdmInstance& inst);

SolveReport fdm_mse_dual(const FdmInstance& inst, const DualOptions& options = {});
SolveReport fdm_md_optimal(const FdmInstance& inst, const DualOptions& options = {});

TransceiverDesign baseline_equal(const FdmInstance& inst);
TransceiverDesign baseline_channel_inversion(const FdmInstance& inst);

/// Runs the named solver and reports total MSE or MD as documented above.
/// Under TDM the columns are slots of one channel, each with the full budget;
/// the TDM MD design falls back to brute_force_oracle on slots whose
/// estimation variances differ across devices.
SolveReport solve(SolverKind kind, const FdmInstance& inst, Scheme scheme,
                  const DualOptions& options = {});

}  // namespace isea
