#pragma once

#include <cstddef>

#include "isea/transceiver.hpp"

namespace isea {

enum class OracleObjective { kMse, kMd };

struct OracleOptions {
  /// Grid points per free coefficient, endpoints included.
  std::size_t grid_resolution = 9;
  /// Maximum number of step halvings in the pattern-search refinement.
  std::size_t refine_steps = 40;
  /// Best grid points kept as refinement starts.
  std::size_t starts = 4;
};

inline constexpr std::size_t kOracleMaxCoefficients = 6;

/// Exhaustive search over feasible tx magnitudes followed by pattern-search
/// refinement. Each device's magnitudes are parametrized by the fraction of
/// its budget it spends and how that power is split across subcarriers; the
/// receive side uses the closed-form MSE-minimizing rx. Throws ValidationError
/// when K * N exceeds kOracleMaxCoefficients.
SolveReport brute_force_oracle(const FdmInstance& inst, OracleObjective objective,
                               const OracleOptions& options = {});

}  // namespace isea
