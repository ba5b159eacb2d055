#include "fuselab/local_filter.hpp"

namespace fuselab {

LocalFilterRun run_local_filter(const Scenario& scenario, std::size_t sensor_index,
                                const std::vector<VectorXd>& measurements, const FilterOptions& options) {
  if (sensor_index >= scenario.sensors.size()) throw DomainError("sensor index out of range");
  if (measurements.size() != scenario.epochs.size())
    throw DomainError("run_local_filter needs exactly one measurement per epoch");
  const auto& sensor = scenario.sensors[sensor_index];
  const auto number = sensor_index + 1;

  LocalFilterRun run;
  run.epochs.reserve(scenario.epochs.size());
  GaussianBelief prior{scenario.epochs.empty() ? 0.0 : scenario.epochs.front(), scenario.initial.mean,
                       scenario.initial.cov};
  for (std::size_t k = 0; k < scenario.epochs.size(); ++k) {
    if (k > 0) {
      prior = time_update(scenario.state, run.epochs.back().posterior, scenario.epochs[k], scenario.dt);
      ++run.covariance_propagations;
    }
    auto update = measurement_update(prior, measurements[k], sensor, options, number);
    run.epochs.push_back({sensor_index, prior, std::move(update.posterior), std::move(update.gain)});
  }
  return run;
}

std::vector<std::vector<MatrixXd>> collect_gains(const std::vector<LocalFilterRun>& runs) {
  const std::size_t epochs = runs.empty() ? 0 : runs.front().epochs.size();
  std::vector<std::vector<MatrixXd>> gains(epochs, std::vector<MatrixXd>(runs.size()));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].epochs.size() != epochs) throw DomainError("local runs cover different epoch counts");
    for (std::size_t k = 0; k < epochs; ++k) gains[k][i] = runs[i].epochs[k].gain;
  }
  return gains;
}

}  // namespace fuselab
