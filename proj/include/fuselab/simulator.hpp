#pragma once

#include "fuselab/cross_covariance.hpp"
#include "fuselab/fusion.hpp"
#include "fuselab/local_filter.hpp"
#include "fuselab/model.hpp"
#include "fuselab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fuselab {

/// Standard normal deviates by the Box-Muller transform; both deviates of a
/// pair are used.
class GaussianSampler {
 public:
  explicit GaussianSampler(CounterRng rng) : rng_(rng) {}

  double operator()();
  VectorXd vector(Eigen::Index size);

 private:
  double uniform_open();  // (0, 1)

  CounterRng rng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

enum class TruthDiscretization {
  euler_maruyama,  // substeps of dt, x += F x h + G ζ, ζ ~ N(0, Q h)
  exact,           // matrix-exponential transition and integrated noise per epoch gap; constant F only
};

struct TruthTrajectory {
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::uint64_t seed = 0;
  std::uint32_t run = 0;
};

/// Measurements indexed [sensor][epoch].
using MeasurementSet = std::vector<std::vector<VectorXd>>;

/// Truth path of run `run`; draws from the (scenario.seed, run, truth) stream.
TruthTrajectory simulate_truth(const Scenario& scenario, std::uint32_t run,
                               TruthDiscretization mode = TruthDiscretization::euler_maruyama);

/// y = H x + v with v ~ N(0, R); sensor i draws from its own substream of
/// (truth.seed, truth.run).
MeasurementSet generate_measurements(const TruthTrajectory& truth, const std::vector<SensorModel>& sensors);

/// Discrete transition Φ = exp(F Δ) and integrated process noise
/// ∫₀^Δ Φ(s) G Q Gᵀ Φ(s)ᵀ ds for a time-invariant model.
struct DiscreteTransition {
  MatrixXd phi;
  MatrixXd noise;
};
DiscreteTransition exact_transition(const StateModel& model, double delta);

struct MethodSpec {
  enum class Kind { local, ff, ci };
  Kind kind = Kind::ff;
  std::size_t sensor = 0;  // local only, 0-based

  static MethodSpec local(std::size_t i) { return {Kind::local, i}; }
  static MethodSpec ff() { return {Kind::ff, 0}; }
  static MethodSpec ci() { return {Kind::ci, 0}; }

  /// "local1".."localN", "ff", "ci".
  std::string name() const;
  bool operator==(const MethodSpec&) const = default;
};

/// Parses a comma list of "ff", "ci", "local" (all local filters) or
/// "localK" (1-based). Duplicates are dropped, order is preserved.
std::vector<MethodSpec> parse_methods(const std::string& list, std::size_t sensors);

/// Everything one filtering pass produces over all epochs.
struct FilterPass {
  std::vector<LocalFilterRun> locals;
  std::optional<CrossCovSeries> bank;  // computed when FF is requested or `with_bank` is set
  std::vector<FusionResult> ff;        // per epoch, empty unless requested
  std::vector<FusionResult> ci;        // per epoch, empty unless requested
};

struct PassOptions {
  bool ff = true;
  bool ci = true;
  /// Compute the cross bank even without FF, so CI results carry actual_cov.
  bool with_bank = false;
  FilterOptions filter;
};

FilterPass run_filter_pass(const Scenario& scenario, const MeasurementSet& measurements, const PassOptions& options);

/// Accumulates squared errors per method, epoch and state component.
class MseAccumulator {
 public:
  MseAccumulator(std::size_t methods, std::size_t epochs, Eigen::Index dim);

  void add(std::size_t method, std::size_t epoch, const VectorXd& truth, const VectorXd& estimate);
  void merge(const MseAccumulator& other);
  void count_run() { ++runs_; }

  std::size_t runs() const { return runs_; }
  /// epochs x n matrix of mean squared errors (sum divided by run count).
  MatrixXd mean(std::size_t method) const;

 private:
  std::vector<MatrixXd> sums_;
  std::size_t runs_ = 0;
};

struct MseSeries {
  std::vector<double> times;
  std::vector<MethodSpec> methods;
  std::size_t runs = 0;
  /// Per method: epochs x n mean squared errors.
  std::vector<MatrixXd> mse;
  /// Per method, per epoch: covariance the method reports (local P, FF P, CI M).
  std::vector<std::vector<MatrixXd>> reported;
  /// Per method, per epoch: true error covariance from the exact bank (fusion
  /// methods, when the bank was computed); otherwise empty.
  std::vector<std::vector<MatrixXd>> actual;
  /// Per method, per epoch: fusion weights (fusion methods only).
  std::vector<std::vector<WeightSet>> weights;

  std::size_t index_of(const MethodSpec& m) const;
};

struct MonteCarloOptions {
  /// Worker threads; 0 selects hardware concurrency. FUSELAB_THREADS caps it.
  std::size_t threads = 0;
  TruthDiscretization truth = TruthDiscretization::euler_maruyama;
  FilterOptions filter;
  /// Force the cross bank so CI entries carry `actual`.
  bool with_bank = false;
};

/// Monte Carlo MSE over scenario.mc_runs runs. Results are reduced in run
/// order, so they are bitwise independent of the thread count.
MseSeries monte_carlo_mse(const Scenario& scenario, const std::vector<MethodSpec>& methods,
                          const MonteCarloOptions& options = {});

/// Worker count after applying the FUSELAB_THREADS cap.
std::size_t resolve_threads(std::size_t requested);

}  // namespace fuselab
