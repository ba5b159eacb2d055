#pragma once

#include "fuselab/fusion.hpp"
#include "fuselab/model.hpp"

#include <string>
#include <vector>

namespace fuselab {

/// Timing of one fusion method for one sensor count.
struct TimingReport {
  FusionMethod method = FusionMethod::ff;
  std::size_t sensors = 0;
  std::size_t epochs = 0;
  /// Median wall time of the method-specific work: cross bank plus FF weights
  /// and fusion, or CI weights and fusion.
  double median_seconds = 0;
  /// Median wall time including the local filters shared by both methods.
  double median_total_seconds = 0;
  /// Method-specific Lyapunov propagations per epoch gap (N(N-1)/2 for FF, 0 for CI).
  std::size_t ode_props = 0;
  /// Method-specific Lyapunov propagations over the whole pass.
  std::size_t ode_props_total = 0;
};

/// Times FF and CI on filtering passes over copies of the scenario with
/// sensor lists cycled out to each requested count. Every replicated sensor
/// draws its own noise stream. All work runs on the calling thread.
std::vector<TimingReport> run_bench(const Scenario& scenario, const std::vector<std::size_t>& sensor_counts,
                                    std::size_t repeats);

/// Columns: N, method, median_seconds, ode_props, median_total_seconds,
/// ode_props_total, epochs.
std::string timing_csv(const std::vector<TimingReport>& reports);

}  // namespace fuselab
