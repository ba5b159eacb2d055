#pragma once

#include "fuselab/errors.hpp"
#include "fuselab/model.hpp"
#include "fuselab/ode.hpp"
#include "fuselab/types.hpp"

#include <string>
#include <vector>

namespace fuselab {

struct FilterOptions {
  /// Joseph-stabilized covariance update instead of (I - K H) P.
  bool joseph_form = false;
};

/// K = P Hᵀ (H P Hᵀ + R)⁻¹ via a Cholesky solve of the innovation covariance.
/// `sensor_number` (1-based, 0 = unnamed) only labels the error message.
template <typename Scalar>
Matrix<Scalar> kalman_gain(const Matrix<Scalar>& p_pred, const Matrix<Scalar>& h, const Matrix<Scalar>& r,
                           std::size_t sensor_number = 0) {
  const Matrix<Scalar> innovation = symmetrized(h * p_pred * h.transpose() + r);
  Eigen::LLT<Matrix<Scalar>> llt(innovation);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("innovation covariance is not positive definite" +
                              (sensor_number ? " for sensor " + std::to_string(sensor_number) : std::string()));
  }
  // S Kᵀ = H Pᵀ
  return llt.solve(h * p_pred.transpose()).transpose();
}

template <typename Scalar>
struct BasicMeasurementUpdate {
  BasicGaussianBelief<Scalar> posterior;
  Matrix<Scalar> gain;
};

using MeasurementUpdate = BasicMeasurementUpdate<double>;

template <typename Scalar>
BasicMeasurementUpdate<Scalar> measurement_update(const BasicGaussianBelief<Scalar>& prior, const Vector<Scalar>& y,
                                                  const Matrix<Scalar>& h, const Matrix<Scalar>& r,
                                                  const FilterOptions& options = {},
                                                  std::size_t sensor_number = 0) {
  if (y.size() != h.rows() || h.cols() != prior.mean.size())
    throw DomainError("measurement update dimension mismatch");
  Matrix<Scalar> k = kalman_gain(prior.cov, h, r, sensor_number);
  const auto n = prior.mean.size();
  const Matrix<Scalar> i_kh = Matrix<Scalar>::Identity(n, n) - k * h;
  BasicMeasurementUpdate<Scalar> out;
  out.posterior.t = prior.t;
  out.posterior.mean = prior.mean + k * (y - h * prior.mean);
  if (options.joseph_form) {
    out.posterior.cov = i_kh * prior.cov * i_kh.transpose() + k * r * k.transpose();
  } else {
    out.posterior.cov = i_kh * prior.cov;
  }
  symmetrize(out.posterior.cov);
  out.gain = std::move(k);
  return out;
}

inline MeasurementUpdate measurement_update(const GaussianBelief& prior, const VectorXd& y,
                                            const SensorModel& sensor, const FilterOptions& options = {},
                                            std::size_t sensor_number = 0) {
  return measurement_update<double>(prior, y, sensor.H, sensor.R, options, sensor_number);
}

/// Belief propagated between epochs with the mean and Lyapunov ODEs.
template <typename Scalar>
BasicGaussianBelief<Scalar> time_update(const BasicStateModel<Scalar>& model, const BasicGaussianBelief<Scalar>& b,
                                        Scalar t1, Scalar dt) {
  BasicGaussianBelief<Scalar> out;
  out.t = t1;
  out.mean = propagate_interval(mean_ode(model), b.mean, b.t, t1, dt);
  out.cov = propagate_interval(covariance_ode(model), b.cov, b.t, t1, dt);
  return out;
}

struct LocalFilterState {
  std::size_t sensor = 0;  // 0-based sensor index
  GaussianBelief prior;
  GaussianBelief posterior;
  MatrixXd gain;
};

struct LocalFilterRun {
  std::vector<LocalFilterState> epochs;
  /// Lyapunov propagations performed (one per epoch gap).
  std::size_t covariance_propagations = 0;
};

/// Continuous-discrete Kalman filter on one sensor's stream. The first
/// measurement update is applied at t_0 with (x̄0, P0) as the prior; each later
/// epoch is a time update followed by a measurement update.
LocalFilterRun run_local_filter(const Scenario& scenario, std::size_t sensor_index,
                                const std::vector<VectorXd>& measurements, const FilterOptions& options = {});

/// Per-epoch gains of a set of local runs, indexed [epoch][sensor].
std::vector<std::vector<MatrixXd>> collect_gains(const std::vector<LocalFilterRun>& runs);

}  // namespace fuselab
