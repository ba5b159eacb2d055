#pragma once

#include "fuselab/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fuselab {

/// Continuous-time linear dynamics dx = F(t) x dt + G dw, where w has
/// white-noise intensity Q. F may be constant or an arbitrary callable of t.
template <typename Scalar>
class BasicStateModel {
 public:
  using MatrixType = Matrix<Scalar>;
  using Drift = std::function<MatrixType(Scalar)>;

  BasicStateModel(MatrixType drift, MatrixType noise_gain, MatrixType intensity)
      : dim_(drift.rows()),
        constant_drift_(std::move(drift)),
        noise_gain_(std::move(noise_gain)),
        intensity_(std::move(intensity)) {
    diffusion_ = diffusion_from(noise_gain_, intensity_);
  }

  BasicStateModel(Drift drift, Eigen::Index dim, MatrixType noise_gain, MatrixType intensity)
      : dim_(dim),
        drift_fn_(std::move(drift)),
        noise_gain_(std::move(noise_gain)),
        intensity_(std::move(intensity)) {
    diffusion_ = diffusion_from(noise_gain_, intensity_);
  }

  Eigen::Index dim() const { return dim_; }
  bool time_invariant() const { return !drift_fn_; }

  MatrixType drift(Scalar t) const { return drift_fn_ ? drift_fn_(t) : constant_drift_; }
  /// Only meaningful for time-invariant models; returns F(0) otherwise.
  MatrixType drift_matrix() const { return drift(Scalar(0)); }

  const MatrixType& noise_gain() const { return noise_gain_; }
  const MatrixType& intensity() const { return intensity_; }
  /// G Q Gᵀ.
  const MatrixType& diffusion() const { return diffusion_; }

 private:
  static MatrixType diffusion_from(const MatrixType& g, const MatrixType& q) {
    if (g.cols() != q.rows() || q.rows() != q.cols()) return MatrixType();
    return g * q * g.transpose();
  }

  Eigen::Index dim_;
  Drift drift_fn_;
  MatrixType constant_drift_;
  MatrixType noise_gain_;
  MatrixType intensity_;
  MatrixType diffusion_;
};

using StateModel = BasicStateModel<double>;

/// One discrete-time sensor: y = H x + v, v ~ N(0, R).
struct SensorModel {
  MatrixXd H;
  MatrixXd R;

  Eigen::Index measurement_dim() const { return H.rows(); }
};

struct InitialBelief {
  VectorXd mean;
  MatrixXd cov;
};

template <typename Scalar>
struct BasicGaussianBelief {
  Scalar t = 0;
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
};

using GaussianBelief = BasicGaussianBelief<double>;

struct Scenario {
  StateModel state;
  InitialBelief initial;
  std::vector<SensorModel> sensors;
  std::vector<double> epochs;
  double dt = 0.01;
  std::int64_t mc_runs = 1000;
  std::uint64_t seed = 0;

  std::size_t sensor_count() const { return sensors.size(); }
  std::size_t epoch_count() const { return epochs.size(); }
};

/// A single invariant violation, e.g. code "R_not_positive_definite" with
/// argument "sensor=2".
struct Violation {
  std::string code;
  std::string argument;
  std::string message;

  /// "code" or "code(argument)".
  std::string tag() const { return argument.empty() ? code : code + "(" + argument + ")"; }
  bool operator==(const Violation&) const = default;
};

/// Every invariant violation of the scenario; empty when valid. Sensor and
/// epoch indices in violation arguments are 1-based and 0-based respectively,
/// matching the usual sensor numbering and the epoch index k.
std::vector<Violation> validate_scenario(const Scenario& s);

/// validate_scenario, throwing ValidationError listing every violation tag.
void require_valid(const Scenario& s);

/// t_k = t0 + k * step for k = 0 .. count-1.
std::vector<double> uniform_epochs(double t0, double step, std::size_t count);

/// Field-by-field equality; F is compared at the first epoch (or t = 0).
bool same_scenario(const Scenario& a, const Scenario& b);

/// Scenario with `count` sensors obtained by cycling through the existing
/// sensor list (sensor k copies sensor k mod N).
Scenario with_replicated_sensors(const Scenario& s, std::size_t count);

// Scenario files (JSON). Unknown keys are rejected.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

}  // namespace fuselab
