#pragma once

#include <string>
#include <vector>

#include "simsel/core.hpp"

namespace simsel {

class Store;

struct PipelineReport {
  MethodId method_id = 0;
  std::size_t records_written = 0;
  std::size_t records_skipped = 0;  // already present before the run
  std::size_t records_failed = 0;   // (sim, t) pairs lost to per-sim errors
  std::size_t records_invalid = 0;  // written with delta_rho flagged invalid
  double wall_time = 0.0;           // seconds
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Compares every simulation at every time step against the method's ground
/// truth at gt_time_step (or at the same step when match_time_steps is set)
/// and stores one PostRecord per (sim, t).
///
/// Already-present records are skipped. A missing or malformed file fails
/// only that simulation; the error lands in the report. Unknown methods
/// throw kNotFound. The stored records do not depend on `jobs`.
PipelineReport postprocess(Store& store, MethodId method_id, int jobs = 1);

// Sequential postprocess per method. Per-method failures, including unknown
// ids, are reported instead of thrown.
std::vector<PipelineReport> postprocess_all(Store& store,
                                            const std::vector<MethodId>& methods,
                                            int jobs = 1);

}  // namespace simsel
