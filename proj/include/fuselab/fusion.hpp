#pragma once

#include "fuselab/errors.hpp"
#include "fuselab/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fuselab {

enum class FusionMethod { ff, ci };

inline const char* to_string(FusionMethod m) { return m == FusionMethod::ff ? "ff" : "ci"; }

/// Matrix weights of a linear fusion rule together with the covariance the
/// rule itself reports (FF: Σ C P C ᵀ; CI: the intersection matrix M).
template <typename Scalar>
struct BasicWeightSet {
  FusionMethod method = FusionMethod::ff;
  std::vector<Matrix<Scalar>> weights;
  Matrix<Scalar> reported_cov;
  /// FF only: the joint covariance needed the Tikhonov retry.
  bool jittered = false;
};

using WeightSet = BasicWeightSet<double>;

template <typename Scalar>
struct BasicFusionResult {
  Scalar t = 0;
  Vector<Scalar> mean;
  BasicWeightSet<Scalar> weightset;
  /// Σ W_i P_ij W_jᵀ with the full joint covariance, whatever the method.
  Matrix<Scalar> actual_cov;
};

using FusionResult = BasicFusionResult<double>;

/// [W_1 ... W_N], n x nN.
template <typename Scalar>
Matrix<Scalar> stacked_weights(const BasicWeightSet<Scalar>& ws) {
  if (ws.weights.empty()) return Matrix<Scalar>();
  const auto n = ws.weights.front().rows();
  Matrix<Scalar> c(n, n * static_cast<Eigen::Index>(ws.weights.size()));
  for (std::size_t i = 0; i < ws.weights.size(); ++i) c.middleCols(n * static_cast<Eigen::Index>(i), n) = ws.weights[i];
  return c;
}

template <typename Scalar>
Matrix<Scalar> weight_sum(const BasicWeightSet<Scalar>& ws) {
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(ws.weights.front().rows(), ws.weights.front().cols());
  for (const auto& w : ws.weights) sum += w;
  return sum;
}

/// Σ_i Σ_j W_i P^(ij) W_jᵀ, symmetrized. Valid for any weight set.
template <typename Scalar>
Matrix<Scalar> actual_fused_covariance(const BasicWeightSet<Scalar>& ws, const Matrix<Scalar>& joint_cov) {
  const Matrix<Scalar> c = stacked_weights(ws);
  if (joint_cov.rows() != c.cols() || joint_cov.cols() != c.cols())
    throw DomainError("joint covariance does not match the weight set");
  return symmetrized(c * joint_cov * c.transpose());
}

/// Σ_i W_i x_i.
template <typename Scalar>
Vector<Scalar> fuse(const BasicWeightSet<Scalar>& ws, const std::vector<Vector<Scalar>>& estimates) {
  if (estimates.size() != ws.weights.size() || estimates.empty())
    throw DomainError("estimate count does not match the weight set");
  Vector<Scalar> out = Vector<Scalar>::Zero(ws.weights.front().rows());
  for (std::size_t i = 0; i < estimates.size(); ++i) out += ws.weights[i] * estimates[i];
  return out;
}

namespace detail {

template <typename Scalar>
Scalar unbiasedness_defect(const std::vector<Matrix<Scalar>>& weights) {
  Matrix<Scalar> sum = -Matrix<Scalar>::Identity(weights.front().rows(), weights.front().cols());
  for (const auto& w : weights) sum += w;
  return sum.cwiseAbs().maxCoeff();
}

// C = (Dᵀ P⁻¹ D)⁻¹ Dᵀ P⁻¹ with D = [I ... I]ᵀ, from two factorized solves.
template <typename Scalar>
std::optional<std::vector<Matrix<Scalar>>> optimal_weights(const Matrix<Scalar>& joint, Eigen::Index n,
                                                           std::size_t sensors) {
  constexpr double kRcondFloor = 1e-13;
  constexpr double kUnbiasedTol = 1e-8;
  const auto nn = n * static_cast<Eigen::Index>(sensors);
  Eigen::LDLT<Matrix<Scalar>> ldlt(joint);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > Scalar(kRcondFloor)))
    return std::nullopt;

  Matrix<Scalar> stack(nn, n);
  for (std::size_t i = 0; i < sensors; ++i) stack.middleRows(n * static_cast<Eigen::Index>(i), n).setIdentity();
  const Matrix<Scalar> x = ldlt.solve(stack);  // P⁻¹ D
  const Matrix<Scalar> info = symmetrized(stack.transpose() * x);
  Eigen::LDLT<Matrix<Scalar>> info_ldlt(info);
  if (info_ldlt.info() != Eigen::Success || !info_ldlt.isPositive()) return std::nullopt;
  const Matrix<Scalar> c = info_ldlt.solve(x.transpose());
  if (!c.allFinite()) return std::nullopt;

  std::vector<Matrix<Scalar>> weights(sensors);
  for (std::size_t i = 0; i < sensors; ++i) weights[i] = c.middleCols(n * static_cast<Eigen::Index>(i), n);
  if (unbiasedness_defect(weights) > Scalar(kUnbiasedTol)) return std::nullopt;
  return weights;
}

}  // namespace detail

/// Optimal matrix weights for N local estimates with joint error covariance
/// P̂ (nN x nN). A singular or numerically indefinite P̂ is retried once with
/// λI added, λ = 1e-9 (1 + trace(P̂)/(nN)); if that also fails a
/// FusionSingularityError is thrown.
template <typename Scalar>
BasicWeightSet<Scalar> ff_weights(const Matrix<Scalar>& joint_cov, Eigen::Index n, std::size_t sensors) {
  const auto nn = n * static_cast<Eigen::Index>(sensors);
  if (n <= 0 || sensors == 0 || joint_cov.rows() != nn || joint_cov.cols() != nn)
    throw DomainError("joint covariance size does not match n and N");
  if (!joint_cov.allFinite()) throw NumericError("joint covariance contains non-finite entries");

  const Matrix<Scalar> joint = symmetrized(joint_cov);
  BasicWeightSet<Scalar> ws;
  ws.method = FusionMethod::ff;
  if (sensors == 1) {
    ws.weights = {Matrix<Scalar>::Identity(n, n)};
  } else if (auto w = detail::optimal_weights(joint, n, sensors)) {
    ws.weights = std::move(*w);
  } else {
    const Scalar lambda = Scalar(1e-9) * (Scalar(1) + joint.trace() / Scalar(nn));
    const Matrix<Scalar> jittered = joint + lambda * Matrix<Scalar>::Identity(nn, nn);
    auto retry = detail::optimal_weights(jittered, n, sensors);
    if (!retry) throw FusionSingularityError("joint covariance is singular even after jitter");
    ws.weights = std::move(*retry);
    ws.jittered = true;
  }
  ws.reported_cov = actual_fused_covariance(ws, joint);
  return ws;
}

/// Covariance-intersection weights W_i = M ω_i P_i⁻¹ with determinant
/// weights ω_i ∝ det(P_i⁻¹), evaluated through log-determinants.
template <typename Scalar>
BasicWeightSet<Scalar> ci_weights(const std::vector<Matrix<Scalar>>& local_covs) {
  if (local_covs.empty()) throw DomainError("CI needs at least one local covariance");
  const auto n = local_covs.front().rows();
  const std::size_t sensors = local_covs.size();
  const Matrix<Scalar> eye = Matrix<Scalar>::Identity(n, n);

  std::vector<Matrix<Scalar>> info(sensors);
  std::vector<Scalar> logdet(sensors);
  for (std::size_t i = 0; i < sensors; ++i) {
    const auto& p = local_covs[i];
    if (p.rows() != n || p.cols() != n) throw DomainError("local covariances must share one size");
    Eigen::LLT<Matrix<Scalar>> llt(symmetrized(p));
    if (!p.allFinite() || !is_symmetric(p) || llt.info() != Eigen::Success)
      throw SingularMatrixError("local covariance of sensor " + std::to_string(i + 1) + " is not positive definite");
    const Matrix<Scalar> l = llt.matrixL();
    logdet[i] = Scalar(2) * l.diagonal().array().log().sum();
    info[i] = symmetrized(llt.solve(eye));
  }

  BasicWeightSet<Scalar> ws;
  ws.method = FusionMethod::ci;
  if (sensors == 1) {
    ws.weights = {eye};
    ws.reported_cov = local_covs.front();
    return ws;
  }

  const Scalar smallest = *std::min_element(logdet.begin(), logdet.end());
  std::vector<Scalar> omega(sensors);
  Scalar total = 0;
  for (std::size_t i = 0; i < sensors; ++i) total += omega[i] = std::exp(smallest - logdet[i]);
  Matrix<Scalar> fused_info = Matrix<Scalar>::Zero(n, n);
  for (std::size_t i = 0; i < sensors; ++i) fused_info += (omega[i] /= total) * info[i];

  Eigen::LLT<Matrix<Scalar>> fused(symmetrized(fused_info));
  if (fused.info() != Eigen::Success) throw SingularMatrixError("CI information matrix is not positive definite");
  ws.reported_cov = symmetrized(fused.solve(eye));
  ws.weights.resize(sensors);
  for (std::size_t i = 0; i < sensors; ++i) ws.weights[i] = omega[i] * fused.solve(info[i]);
  return ws;
}

}  // namespace fuselab
