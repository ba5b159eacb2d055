#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace fuselab {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Symmetry/PSD tolerance scaled by the magnitude of the diagonal:
/// 1e-9 * (1 + sum|P_ii| / n).
template <typename Derived>
typename Derived::Scalar sym_tolerance(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  const auto n = p.rows();
  if (n == 0) return Scalar(1e-9);
  return Scalar(1e-9) * (Scalar(1) + p.diagonal().cwiseAbs().sum() / Scalar(n));
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& p) {
  return (p + p.transpose()) / typename Derived::Scalar(2);
}

template <typename Scalar>
void symmetrize(Matrix<Scalar>& p) {
  p = symmetrized(p);
}

template <typename Derived>
typename Derived::Scalar min_symmetric_eigenvalue(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  if (p.rows() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(p), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& p) {
  if (p.rows() != p.cols()) return false;
  return (p - p.transpose()).cwiseAbs().maxCoeff() <= sym_tolerance(p);
}

/// Symmetric and all eigenvalues >= -tolerance.
template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& p) {
  return is_symmetric(p) && min_symmetric_eigenvalue(p) >= -sym_tolerance(p);
}

/// Symmetric and Cholesky-factorizable.
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(p) || p.rows() == 0) return false;
  Eigen::LLT<Matrix<Scalar>> llt(symmetrized(p));
  return llt.info() == Eigen::Success;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Square root factor S with S Sᵀ = P for a PSD matrix; negative eigenvalues
/// from round-off are clamped to zero.
template <typename Derived>
Matrix<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(p));
  const Vector<Scalar> root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace fuselab
