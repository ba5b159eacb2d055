#include "fuselab/cross_covariance.hpp"
#include "fuselab/local_filter.hpp"
#include "fuselab/simulator.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace fuselab;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

Scenario oscillator(std::size_t sensors) {
  MatrixXd g(2, 1);
  g << 0, 1;
  MatrixXd h(1, 2);
  h << 1, 0;
  std::vector<SensorModel> list;
  for (std::size_t i = 0; i < sensors; ++i) list.push_back({h, m1(1.0 + static_cast<double>(i % 3))});
  return Scenario{StateModel(oracle::oscillator_drift(2, 0.1), g, m1(2)),
                  InitialBelief{VectorXd::Zero(2), MatrixXd::Identity(2, 2)},
                  list,
                  uniform_epochs(0, 0.1, 51),
                  0.01,
                  100,
                  9};
}

std::vector<LocalFilterRun> locals_for(const Scenario& s) {
  const auto truth = simulate_truth(s, 0);
  const auto y = generate_measurements(truth, s.sensors);
  std::vector<LocalFilterRun> runs;
  for (std::size_t i = 0; i < s.sensor_count(); ++i) runs.push_back(run_local_filter(s, i, y[i]));
  return runs;
}

}  // namespace

TEST_CASE("cross measurement update") {
  MatrixXd p(2, 2);
  p << 0.5, 0.1, -0.3, 0.8;
  const MatrixXd zero_k = MatrixXd::Zero(2, 1);
  MatrixXd h(1, 2);
  h << 1, 0;
  CHECK(cross_measurement_update<double>(p, zero_k, h, zero_k, h) == p);

  const MatrixXd eye = MatrixXd::Identity(2, 2);
  CHECK(cross_measurement_update<double>(p, eye, eye, 0.3 * eye, eye).norm() == 0.0);

  CHECK(cross_measurement_update<double>(m1(0.4), m1(0.3), m1(1), m1(0.5), m1(1))(0, 0) == doctest::Approx(0.14));
  CHECK_THROWS_AS(cross_measurement_update<double>(p, m1(1), m1(1), zero_k, h), DomainError);
}

TEST_CASE("cross time update") {
  SUBCASE("frozen dynamics") {
    const StateModel frozen(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2));
    MatrixXd p(2, 2);
    p << 1, 2, 3, 4;
    CHECK(cross_time_update(frozen, p, 0.0, 1.0, 0.01) == p);
  }
  SUBCASE("same ODE as the local covariance when started equal") {
    const auto s = oscillator(1);
    MatrixXd p(2, 2);
    p << 0.7, 0.1, 0.1, 0.4;
    const MatrixXd cross = cross_time_update(s.state, p, 0.0, 0.1, 0.01);
    const MatrixXd local = propagate_interval(covariance_ode(s.state), p, 0.0, 0.1, 0.01);
    CHECK((cross - local).norm() < 1e-14);
  }
  SUBCASE("scalar closed form") {
    const StateModel model(m1(-1), m1(1), m1(1));
    const double p = cross_time_update(model, m1(0), 0.0, 1.0, 0.01)(0, 0);
    CHECK(std::abs(p - 0.5 * (1 - std::exp(-2.0))) < 1e-8);
    CHECK(p == doctest::Approx(0.43233).epsilon(1e-5));
  }
}

TEST_CASE("bank layout") {
  MatrixXd p0(2, 2);
  p0 << 1, 0, 0, 1;
  CrossCovBank bank(0.0, 4, p0);
  CHECK(bank.pairs() == 6);
  CHECK(CrossCovBank::pair_count(1) == 0);
  CHECK(CrossCovBank::pair_count(6) == 15);
  bank.upper(1, 3) << 1, 2, 3, 4;
  CHECK(bank.block(3, 1) == bank.upper(1, 3).transpose());
  CHECK(bank.block(0, 1) == p0);
  CHECK_THROWS_AS(bank.block(2, 2), DomainError);
  CHECK_THROWS_AS(bank.upper(3, 1), DomainError);
}

TEST_CASE("single sensor has an empty bank") {
  const auto s = oscillator(1);
  const auto series = run_cross_bank(s, collect_gains(locals_for(s)));
  REQUIRE(series.epochs.size() == 51);
  for (const auto& b : series.epochs) CHECK(b.pairs() == 0);
  CHECK(series.covariance_propagations == 0);
}

TEST_CASE("identical sensors: the cross block is the independent-noise recursion") {
  // The cross recursion assumes independent sensor noises, so with shared
  // H and R the cross block differs from the local covariance by K R Kᵀ at t0.
  auto s = oscillator(2);
  s.sensors[1] = s.sensors[0];
  const auto locals = locals_for(s);
  const auto series = run_cross_bank(s, collect_gains(locals));
  const MatrixXd& k0 = locals[0].epochs[0].gain;
  const MatrixXd expected = locals[0].epochs[0].posterior.cov - k0 * s.sensors[0].R * k0.transpose();
  CHECK((series.epochs[0].upper(0, 1) - expected).norm() < 1e-12);
  for (const auto& b : series.epochs) {
    const MatrixXd& p = b.upper(0, 1);
    CHECK((p - p.transpose()).norm() < 1e-12);
  }
}

TEST_CASE("joint covariance bounds on the oscillator") {
  const auto s = oscillator(3);
  const auto locals = locals_for(s);
  const auto series = run_cross_bank(s, collect_gains(locals));
  for (std::size_t k = 0; k < s.epoch_count(); ++k) {
    std::vector<MatrixXd> covs;
    for (const auto& l : locals) covs.push_back(l.epochs[k].posterior.cov);
    const MatrixXd joint = assemble_joint_covariance(covs, series.epochs[k]);
    CHECK(joint.rows() == 6);
    CHECK(min_symmetric_eigenvalue(joint) >= -sym_tolerance(joint));
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = i + 1; j < 3; ++j) {
        const double nij = series.epochs[k].upper(i, j).operatorNorm();
        const double bound = std::sqrt(covs[i].operatorNorm() * covs[j].operatorNorm());
        CHECK(nij <= bound + sym_tolerance(joint));
      }
    }
  }
}

TEST_CASE("Lyapunov propagation counts") {
  for (std::size_t n : {2u, 3u, 6u}) {
    const auto s = oscillator(n);
    const auto locals = locals_for(s);
    std::size_t local_props = 0;
    for (const auto& l : locals) local_props += l.covariance_propagations;
    const auto series = run_cross_bank(s, collect_gains(locals));
    const std::size_t gaps = s.epoch_count() - 1;
    CHECK(local_props == n * gaps);
    CHECK(series.covariance_propagations == n * (n - 1) / 2 * gaps);
  }
}

TEST_CASE("bank cross-covariance matches Monte Carlo local errors") {
  const auto s = load_scenario(std::string(FUSELAB_SCENARIO_DIR) + "/scalar_two_sensor.json");
  std::vector<double> e1, e2;
  const std::size_t last = s.epoch_count() - 1;
  std::optional<CrossCovSeries> series;
  for (std::uint32_t run = 0; run < 5000; ++run) {
    const auto truth = simulate_truth(s, run);
    const auto y = generate_measurements(truth, s.sensors);
    std::vector<LocalFilterRun> locals{run_local_filter(s, 0, y[0]), run_local_filter(s, 1, y[1])};
    e1.push_back(truth.states[last](0) - locals[0].epochs[last].posterior.mean(0));
    e2.push_back(truth.states[last](0) - locals[1].epochs[last].posterior.mean(0));
    if (!series) series = run_cross_bank(s, collect_gains(locals));
  }
  const double p12 = series->epochs[last].upper(0, 1)(0, 0);
  CHECK(oracle::sample_cov(e1, e2) == doctest::Approx(p12).epsilon(0.10));
}
