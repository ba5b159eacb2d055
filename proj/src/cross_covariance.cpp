#include "fuselab/cross_covariance.hpp"

#include "fuselab/errors.hpp"

namespace fuselab {

CrossCovBank::CrossCovBank(double t, std::size_t sensors, const MatrixXd& initial)
    : t_(t), sensors_(sensors), blocks_(pair_count(sensors), initial) {}

std::size_t CrossCovBank::index(std::size_t i, std::size_t j) const {
  if (i >= j || j >= sensors_) throw DomainError("cross-covariance pair index out of range");
  // Row-major enumeration of the strict upper triangle.
  return i * sensors_ - i * (i + 1) / 2 + (j - i - 1);
}

MatrixXd CrossCovBank::block(std::size_t i, std::size_t j) const {
  if (i == j) throw DomainError("diagonal blocks live in the local filters");
  return i < j ? upper(i, j) : MatrixXd(upper(j, i).transpose());
}

CrossCovSeries run_cross_bank(const Scenario& scenario, const std::vector<std::vector<MatrixXd>>& gains) {
  const std::size_t sensors = scenario.sensors.size();
  if (gains.size() != scenario.epochs.size()) throw DomainError("gains must cover every epoch");
  CrossCovSeries series;
  series.epochs.reserve(gains.size());

  CrossCovBank bank(scenario.epochs.empty() ? 0.0 : scenario.epochs.front(), sensors, scenario.initial.cov);
  for (std::size_t k = 0; k < gains.size(); ++k) {
    if (gains[k].size() != sensors) throw DomainError("gains must cover every sensor");
    const double t = scenario.epochs[k];
    for (std::size_t i = 0; i < sensors; ++i) {
      for (std::size_t j = i + 1; j < sensors; ++j) {
        MatrixXd& p = bank.upper(i, j);
        if (k > 0) {
          p = cross_time_update(scenario.state, p, bank.time(), t, scenario.dt);
          ++series.covariance_propagations;
        }
        p = cross_measurement_update<double>(p, gains[k][i], scenario.sensors[i].H, gains[k][j],
                                             scenario.sensors[j].H);
      }
    }
    bank.set_time(t);
    series.epochs.push_back(bank);
  }
  return series;
}

MatrixXd assemble_joint_covariance(const std::vector<MatrixXd>& local_covs, const CrossCovBank& bank) {
  const std::size_t sensors = local_covs.size();
  if (sensors == 0) throw DomainError("no local covariances");
  if (bank.sensors() != sensors && sensors > 1) throw DomainError("bank and local covariance counts differ");
  const auto n = local_covs.front().rows();
  MatrixXd joint(n * static_cast<Eigen::Index>(sensors), n * static_cast<Eigen::Index>(sensors));
  for (std::size_t i = 0; i < sensors; ++i) {
    const auto ri = n * static_cast<Eigen::Index>(i);
    joint.block(ri, ri, n, n) = local_covs[i];
    for (std::size_t j = i + 1; j < sensors; ++j) {
      const auto rj = n * static_cast<Eigen::Index>(j);
      joint.block(ri, rj, n, n) = bank.upper(i, j);
      joint.block(rj, ri, n, n) = bank.upper(i, j).transpose();
    }
  }
  symmetrize(joint);
  return joint;
}

}  // namespace fuselab
