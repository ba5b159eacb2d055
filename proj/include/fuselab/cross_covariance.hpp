#pragma once

#include "fuselab/model.hpp"
#include "fuselab/ode.hpp"
#include "fuselab/types.hpp"

#include <vector>

namespace fuselab {

/// Pairwise cross-covariances P^(ij) of local estimation errors at one time.
/// Only i < j is stored; block(j, i) is materialized as block(i, j)ᵀ.
class CrossCovBank {
 public:
  CrossCovBank() = default;
  CrossCovBank(double t, std::size_t sensors, const MatrixXd& initial);

  static std::size_t pair_count(std::size_t sensors) { return sensors * (sensors - (sensors > 0)) / 2; }

  double time() const { return t_; }
  void set_time(double t) { t_ = t; }
  std::size_t sensors() const { return sensors_; }
  std::size_t pairs() const { return blocks_.size(); }

  /// P^(ij) for i != j (0-based).
  MatrixXd block(std::size_t i, std::size_t j) const;
  /// Stored block for i < j.
  const MatrixXd& upper(std::size_t i, std::size_t j) const { return blocks_[index(i, j)]; }
  MatrixXd& upper(std::size_t i, std::size_t j) { return blocks_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const;

  double t_ = 0;
  std::size_t sensors_ = 0;
  std::vector<MatrixXd> blocks_;
};

/// (I - K_i H_i) P_ij (I - K_j H_j)ᵀ. Not symmetrized.
template <typename Scalar>
Matrix<Scalar> cross_measurement_update(const Matrix<Scalar>& p_ij_pred, const Matrix<Scalar>& k_i,
                                        const Matrix<Scalar>& h_i, const Matrix<Scalar>& k_j,
                                        const Matrix<Scalar>& h_j) {
  const auto n = p_ij_pred.rows();
  if (p_ij_pred.cols() != n || k_i.rows() != n || k_j.rows() != n || k_i.cols() != h_i.rows() ||
      k_j.cols() != h_j.rows() || h_i.cols() != n || h_j.cols() != n)
    throw DomainError("cross measurement update dimension mismatch");
  const Matrix<Scalar> eye = Matrix<Scalar>::Identity(n, n);
  return (eye - k_i * h_i) * p_ij_pred * (eye - k_j * h_j).transpose();
}

/// Lyapunov propagation of a cross block, without symmetrization.
template <typename Scalar>
Matrix<Scalar> cross_time_update(const BasicStateModel<Scalar>& model, const Matrix<Scalar>& p_ij,
                                 std::type_identity_t<Scalar> t0, std::type_identity_t<Scalar> t1,
                                 std::type_identity_t<Scalar> dt) {
  return propagate_interval(cross_covariance_ode(model), p_ij, t0, t1, dt);
}

struct CrossCovSeries {
  std::vector<CrossCovBank> epochs;
  /// Lyapunov propagations performed: pairs per epoch gap.
  std::size_t covariance_propagations = 0;
};

/// Runs the exact cross-covariance recursion alongside the local filters.
/// `gains` is indexed [epoch][sensor] and must come from the local filters;
/// every block starts from P0.
CrossCovSeries run_cross_bank(const Scenario& scenario, const std::vector<std::vector<MatrixXd>>& gains);

/// Joint covariance [P^(ij)] of size nN x nN from the local covariances and
/// the bank. The result is symmetrized.
MatrixXd assemble_joint_covariance(const std::vector<MatrixXd>& local_covs, const CrossCovBank& bank);

}  // namespace fuselab
