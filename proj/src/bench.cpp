#include "fuselab/bench.hpp"

#include "fuselab/cross_covariance.hpp"
#include "fuselab/csv.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/local_filter.hpp"
#include "fuselab/simulator.hpp"

#include <algorithm>
#include <chrono>

namespace fuselab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Keeps fused results observable so the timed loops are not optimized away.
double sink(const VectorXd& v) { return v.sum(); }

}  // namespace

std::vector<TimingReport> run_bench(const Scenario& base, const std::vector<std::size_t>& sensor_counts,
                                    std::size_t repeats) {
  require_valid(base);
  if (repeats == 0) throw ValidationError("repeats must be positive");
  std::vector<TimingReport> reports;
  volatile double observed = 0;

  for (std::size_t count : sensor_counts) {
    if (count == 0) throw ValidationError("sensor counts must be positive");
    const Scenario scenario = with_replicated_sensors(base, count);
    const auto truth = simulate_truth(scenario, 0);
    const auto measurements = generate_measurements(truth, scenario.sensors);
    const std::size_t epochs = scenario.epochs.size();
    const auto n = scenario.state.dim();

    std::vector<double> ff_time, ci_time, ff_total, ci_total;
    std::size_t ff_props = 0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      auto start = Clock::now();
      std::vector<LocalFilterRun> locals;
      locals.reserve(count);
      for (std::size_t i = 0; i < count; ++i) locals.push_back(run_local_filter(scenario, i, measurements[i]));
      const double local_time = seconds_since(start);

      std::vector<MatrixXd> covs(count);
      std::vector<VectorXd> means(count);
      const auto gather = [&](std::size_t k) {
        for (std::size_t i = 0; i < count; ++i) {
          covs[i] = locals[i].epochs[k].posterior.cov;
          means[i] = locals[i].epochs[k].posterior.mean;
        }
      };

      start = Clock::now();
      const auto bank = run_cross_bank(scenario, collect_gains(locals));
      for (std::size_t k = 0; k < epochs; ++k) {
        gather(k);
        const auto ws = ff_weights(assemble_joint_covariance(covs, bank.epochs[k]), n, count);
        observed = observed + sink(fuse(ws, means));
      }
      ff_time.push_back(seconds_since(start));
      ff_total.push_back(local_time + ff_time.back());
      ff_props = bank.covariance_propagations;

      start = Clock::now();
      for (std::size_t k = 0; k < epochs; ++k) {
        gather(k);
        const auto ws = ci_weights(covs);
        observed = observed + sink(fuse(ws, means));
      }
      ci_time.push_back(seconds_since(start));
      ci_total.push_back(local_time + ci_time.back());
    }

    const std::size_t gaps = epochs > 1 ? epochs - 1 : 1;
    reports.push_back({FusionMethod::ff, count, epochs, median(ff_time), median(ff_total),
                       epochs > 1 ? ff_props / gaps : CrossCovBank::pair_count(count), ff_props});
    reports.push_back({FusionMethod::ci, count, epochs, median(ci_time), median(ci_total), 0, 0});
  }
  return reports;
}

std::string timing_csv(const std::vector<TimingReport>& reports) {
  CsvWriter csv({"N", "method", "median_seconds", "ode_props", "median_total_seconds", "ode_props_total", "epochs"});
  for (const auto& r : reports) {
    csv.row({std::to_string(r.sensors), to_string(r.method), format_double(r.median_seconds),
             std::to_string(r.ode_props), format_double(r.median_total_seconds), std::to_string(r.ode_props_total),
             std::to_string(r.epochs)});
  }
  return csv.str();
}

}  // namespace fuselab
