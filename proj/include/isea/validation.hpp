#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "isea/transceiver.hpp"

namespace isea {

/// Random solver instance: Rayleigh gains, budgets from `snr_db` against
/// noise 0.1, moments and estimation variances drawn uniformly. With
/// `homogeneous`, every device shares one estimation variance per column.
FdmInstance random_instance(std::size_t num_devices, std::size_t num_columns, double snr_db,
                            bool homogeneous, std::uint64_t seed);

TdmInstance random_tdm_instance(std::size_t num_devices, double snr_db, std::uint64_t seed);

struct InvariantResult {
  std::string name;
  std::size_t checked = 0;
  std::size_t failures = 0;
  /// Largest observed violation measure.
  double worst = 0.0;
  double tolerance = 0.0;

  bool passed() const noexcept { return failures == 0 && checked > 0; }
};

struct ValidationOptions {
  std::size_t instances = 100;
  std::uint64_t seed = 1;
  double objective_tolerance = 1e-3;
  double kkt_tolerance = 1e-6;
  double equivalence_tolerance = 1e-6;
  /// Relative slack on the FDM dominance comparisons.
  double dominance_tolerance = 1e-6;
};

/// Oracle agreement, KKT residuals, feasibility, TDM equivalence and FDM
/// dominance on seeded random small instances.
std::vector<InvariantResult> validate_solvers(const ValidationOptions& options = {});

/// Dual options tight enough for the KKT tolerance used above.
DualOptions tight_dual_options();

}  // namespace isea
