#include "fuselab/fusion.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace fuselab;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

// Scalar steady-state triple for q = 1, r = (5, 2).
constexpr double kP11 = 5.0 / 11.0;
constexpr double kP22 = 0.4;
constexpr double kP12 = 4.0 / 11.0;

MatrixXd scalar_joint() {
  MatrixXd j(2, 2);
  j << kP11, kP12, kP12, kP22;
  return j;
}

std::vector<MatrixXd> diagonal_blocks(const MatrixXd& joint, Eigen::Index n, std::size_t sensors) {
  std::vector<MatrixXd> out;
  for (std::size_t i = 0; i < sensors; ++i) {
    const auto r = n * static_cast<Eigen::Index>(i);
    out.push_back(joint.block(r, r, n, n));
  }
  return out;
}

MatrixXd permute_blocks(const MatrixXd& joint, Eigen::Index n, const std::vector<std::size_t>& perm) {
  MatrixXd out(joint.rows(), joint.cols());
  for (std::size_t a = 0; a < perm.size(); ++a)
    for (std::size_t b = 0; b < perm.size(); ++b)
      out.block(n * static_cast<Eigen::Index>(a), n * static_cast<Eigen::Index>(b), n, n) =
          joint.block(n * static_cast<Eigen::Index>(perm[a]), n * static_cast<Eigen::Index>(perm[b]), n, n);
  return out;
}

}  // namespace

TEST_CASE("FF on an uncorrelated identical pair halves the covariance") {
  MatrixXd joint = MatrixXd::Identity(4, 4);
  const auto ws = ff_weights(joint, 2, 2);
  CHECK(ws.method == FusionMethod::ff);
  for (const auto& w : ws.weights) CHECK((w - 0.5 * MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK((ws.reported_cov - 0.5 * MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK_FALSE(ws.jittered);
}

TEST_CASE("FF on the scalar steady-state triple") {
  const double c1 = (kP22 - kP12) / (kP11 + kP22 - 2 * kP12);
  const double c2 = (kP11 - kP12) / (kP11 + kP22 - 2 * kP12);
  CHECK(c1 == doctest::Approx(0.285714).epsilon(1e-5));
  const auto ws = ff_weights(scalar_joint(), 1, 2);
  CHECK(std::abs(ws.weights[0](0, 0) - c1) < 1e-6);
  CHECK(std::abs(ws.weights[1](0, 0) - c2) < 1e-6);
  CHECK(std::abs(ws.reported_cov(0, 0) - 0.3896) < 5e-5);
  CHECK((actual_fused_covariance(ws, scalar_joint()) - ws.reported_cov).norm() < 1e-10);
}

TEST_CASE("CI weights") {
  SUBCASE("single sensor") {
    MatrixXd p(2, 2);
    p << 2, 0.5, 0.5, 1;
    const auto ws = ci_weights<double>({p});
    CHECK(ws.weights[0] == MatrixXd::Identity(2, 2));
    CHECK(ws.reported_cov == p);
  }
  SUBCASE("three identical sensors") {
    MatrixXd p(2, 2);
    p << 2, 0.5, 0.5, 1;
    const auto ws = ci_weights<double>({p, p, p});
    for (const auto& w : ws.weights) CHECK((w - MatrixXd::Identity(2, 2) / 3.0).norm() < 1e-12);
    CHECK((ws.reported_cov - p).norm() < 1e-12);
  }
  SUBCASE("scalar steady-state pair") {
    const double w1 = kP22 * kP22 / (kP11 * kP11 + kP22 * kP22);
    CHECK(w1 == doctest::Approx(0.436430).epsilon(1e-5));
    const auto ws = ci_weights<double>({m1(kP11), m1(kP22)});
    CHECK(std::abs(ws.weights[0](0, 0) - w1) < 1e-6);
    CHECK(std::abs(ws.weights[1](0, 0) - (1 - w1)) < 1e-6);
    CHECK(std::abs(actual_fused_covariance(ws, scalar_joint())(0, 0) - 0.3925) < 5e-5);
  }
  SUBCASE("non-PD local covariance names the sensor") {
    try {
      ci_weights<double>({m1(1), m1(0)});
      FAIL("expected an error");
    } catch (const SingularMatrixError& e) {
      CHECK(std::string(e.what()).find("sensor 2") != std::string::npos);
    }
  }
  SUBCASE("extreme scales do not overflow the determinant weights") {
    const MatrixXd big = 1e200 * MatrixXd::Identity(3, 3);
    const MatrixXd small = 1e-200 * MatrixXd::Identity(3, 3);
    const auto ws = ci_weights<double>({big, small});
    CHECK(ws.weights[0].allFinite());
    CHECK((weight_sum(ws) - MatrixXd::Identity(3, 3)).norm() < 1e-8);
  }
}

TEST_CASE("fuse") {
  WeightSet ws;
  ws.weights = {m1(0.285714), m1(0.714286)};
  CHECK(fuse<double>(ws, {VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 2.0)})(0) ==
        doctest::Approx(1.714286).epsilon(1e-9));

  WeightSet pick;
  pick.weights = {MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)};
  VectorXd a(2), b(2);
  a << 1, 2;
  b << -5, 7;
  CHECK(fuse<double>(pick, {a, b}) == a);

  const auto ci = ci_weights<double>({MatrixXd::Identity(2, 2), 3 * MatrixXd::Identity(2, 2)});
  CHECK((fuse<double>(ci, {b, b}) - b).norm() < 1e-12);
  CHECK_THROWS_AS(fuse<double>(ci, {b}), DomainError);
}

TEST_CASE("actual covariance of equal weights") {
  WeightSet ws;
  ws.weights = {m1(0.5), m1(0.5)};
  CHECK(std::abs(actual_fused_covariance(ws, scalar_joint())(0, 0) - 0.395455) < 1e-6);
}

TEST_CASE("exactly singular joint covariance is rescued by jitter") {
  MatrixXd p(2, 2);
  p << 1.0, 0.3, 0.3, 0.6;
  MatrixXd joint(4, 4);
  joint << p, p, p, p;
  const auto ws = ff_weights(joint, 2, 2);
  CHECK(ws.jittered);
  CHECK((weight_sum(ws) - MatrixXd::Identity(2, 2)).norm() < 1e-8);
  for (const auto& w : ws.weights) CHECK((w - 0.5 * MatrixXd::Identity(2, 2)).norm() < 1e-6);
  CHECK((ws.reported_cov - p).norm() < 1e-8);
}

TEST_CASE("indefinite joint covariance throws") {
  MatrixXd joint(2, 2);
  joint << 1, 3, 3, 1;
  CHECK_THROWS_AS(ff_weights(joint, 1, 2), FusionSingularityError);
  CHECK_THROWS_AS(ff_weights(joint, 2, 2), DomainError);
}

TEST_CASE("random joint covariances: optimality, bounds and equivariance") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> unit(-1, 1);
  int draws = 0;
  for (std::size_t sensors : {2u, 3u}) {
    for (Eigen::Index n : {1, 2}) {
      for (int d = 0; d < 25; ++d, ++draws) {
        const auto nn = n * static_cast<Eigen::Index>(sensors);
        const MatrixXd joint = oracle::random_spd(nn, rng);
        const auto locals = diagonal_blocks(joint, n, sensors);
        const auto ff = ff_weights(joint, n, sensors);
        const auto ci = ci_weights(locals);
        const double ff_trace = actual_fused_covariance(ff, joint).trace();
        CHECK((weight_sum(ff) - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((weight_sum(ci) - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(ff_trace <= actual_fused_covariance(ci, joint).trace() + 1e-9);
        for (const auto& p : locals) CHECK(ff_trace <= p.trace() + 1e-9);

        // Any other unbiased rule: random weights with the last fixed by Σ = I.
        WeightSet other;
        MatrixXd rest = MatrixXd::Identity(n, n);
        for (std::size_t i = 0; i + 1 < sensors; ++i) {
          MatrixXd w = MatrixXd::NullaryExpr(n, n, [&] { return unit(rng); });
          other.weights.push_back(w);
          rest -= w;
        }
        other.weights.push_back(rest);
        CHECK(ff_trace <= actual_fused_covariance(other, joint).trace() + 1e-9);

        // CI bound holds for any joint covariance with these diagonal blocks.
        const MatrixXd gap = ci.reported_cov - actual_fused_covariance(ci, joint);
        CHECK(min_symmetric_eigenvalue(gap) >= -sym_tolerance(ci.reported_cov));

        // Common scaling leaves CI weights and scales M.
        std::vector<MatrixXd> scaled;
        for (const auto& p : locals) scaled.push_back(7.5 * p);
        const auto ci_scaled = ci_weights(scaled);
        for (std::size_t i = 0; i < sensors; ++i) CHECK((ci_scaled.weights[i] - ci.weights[i]).norm() < 1e-10);
        CHECK((ci_scaled.reported_cov - 7.5 * ci.reported_cov).norm() < 1e-10 * (1 + ci.reported_cov.norm()));

        // Permuting sensors permutes the weights.
        std::vector<std::size_t> perm(sensors);
        for (std::size_t i = 0; i < sensors; ++i) perm[i] = (i + 1) % sensors;
        const auto ff_perm = ff_weights(permute_blocks(joint, n, perm), n, sensors);
        std::vector<MatrixXd> locals_perm;
        for (std::size_t i = 0; i < sensors; ++i) locals_perm.push_back(locals[perm[i]]);
        const auto ci_perm = ci_weights(locals_perm);
        for (std::size_t i = 0; i < sensors; ++i) {
          CHECK((ff_perm.weights[i] - ff.weights[perm[i]]).norm() < 1e-8);
          CHECK((ci_perm.weights[i] - ci.weights[perm[i]]).norm() < 1e-10);
        }
      }
    }
  }
  CHECK(draws == 100);
}

TEST_CASE("single-sensor FF is the identity") {
  MatrixXd p(2, 2);
  p << 2, 0.1, 0.1, 1;
  const auto ws = ff_weights(p, 2, 1);
  CHECK(ws.weights[0] == MatrixXd::Identity(2, 2));
  CHECK((ws.reported_cov - p).norm() < 1e-15);
}

TEST_CASE("long double instantiation") {
  using LD = long double;
  Matrix<LD> joint(2, 2);
  joint << LD(5) / 11, LD(4) / 11, LD(4) / 11, LD(2) / 5;
  const auto ws = ff_weights(joint, 1, 2);
  CHECK(static_cast<double>(ws.reported_cov(0, 0)) == doctest::Approx(0.389610).epsilon(1e-5));
}
