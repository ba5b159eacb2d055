#include "fuselab/simulator.hpp"

#include "fuselab/errors.hpp"
#include "fuselab/ode.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cctype>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace fuselab {

double GaussianSampler::uniform_open() {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSampler::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
  const double angle = 2.0 * std::numbers::pi * uniform_open();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

VectorXd GaussianSampler::vector(Eigen::Index size) {
  VectorXd z(size);
  for (Eigen::Index i = 0; i < size; ++i) z(i) = (*this)();
  return z;
}

DiscreteTransition exact_transition(const StateModel& model, double delta) {
  if (!model.time_invariant()) throw DomainError("exact discretization requires a constant drift matrix");
  const auto n = model.dim();
  const MatrixXd f = model.drift_matrix();
  // Van Loan: exp([[-F, GQGᵀ], [0, Fᵀ]] Δ) = [[·, Φ⁻¹ Qd], [0, Φᵀ]].
  MatrixXd block = MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -f;
  block.topRightCorner(n, n) = model.diffusion();
  block.bottomRightCorner(n, n) = f.transpose();
  const MatrixXd e = (block * delta).exp();
  DiscreteTransition out;
  out.phi = e.bottomRightCorner(n, n).transpose();
  out.noise = symmetrized(out.phi * e.topRightCorner(n, n));
  return out;
}

TruthTrajectory simulate_truth(const Scenario& scenario, std::uint32_t run, TruthDiscretization mode) {
  const auto& model = scenario.state;
  GaussianSampler normal(CounterRng(scenario.seed, run, static_cast<std::uint32_t>(StreamId::truth)));

  TruthTrajectory truth;
  truth.seed = scenario.seed;
  truth.run = run;
  truth.times = scenario.epochs;
  truth.states.reserve(scenario.epochs.size());
  if (scenario.epochs.empty()) return truth;

  const auto n = model.dim();
  VectorXd x = scenario.initial.mean + psd_sqrt(scenario.initial.cov) * normal.vector(n);
  truth.states.push_back(x);

  const MatrixXd g = model.noise_gain();
  const MatrixXd q_root = psd_sqrt(model.intensity());
  const auto p = q_root.cols();
  for (std::size_t k = 1; k < scenario.epochs.size(); ++k) {
    const double t0 = scenario.epochs[k - 1];
    const double t1 = scenario.epochs[k];
    if (mode == TruthDiscretization::exact) {
      const auto tr = exact_transition(model, t1 - t0);
      x = tr.phi * x + psd_sqrt(tr.noise) * normal.vector(n);
    } else {
      const auto plan = plan_steps(t0, t1, scenario.dt);
      const auto advance = [&](double t, double h) {
        const VectorXd zeta = std::sqrt(h) * (q_root * normal.vector(p));
        x = x + model.drift(t) * x * h + g * zeta;
      };
      for (std::size_t s = 0; s < plan.full_steps; ++s) advance(t0 + static_cast<double>(s) * scenario.dt, scenario.dt);
      if (plan.last_step > 0) advance(t0 + static_cast<double>(plan.full_steps) * scenario.dt, plan.last_step);
    }
    if (!x.allFinite()) throw NumericError("truth trajectory overflowed at t=" + std::to_string(t1));
    truth.states.push_back(x);
  }
  return truth;
}

MeasurementSet generate_measurements(const TruthTrajectory& truth, const std::vector<SensorModel>& sensors) {
  MeasurementSet out(sensors.size());
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const auto& sensor = sensors[i];
    GaussianSampler normal(CounterRng::for_sensor(truth.seed, truth.run, i));
    const MatrixXd r_root = psd_sqrt(sensor.R);
    out[i].reserve(truth.states.size());
    for (const auto& x : truth.states) out[i].push_back(sensor.H * x + r_root * normal.vector(sensor.R.rows()));
  }
  return out;
}

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::local:
      return "local" + std::to_string(sensor + 1);
    case Kind::ff:
      return "ff";
    case Kind::ci:
      return "ci";
  }
  return "?";
}

std::vector<MethodSpec> parse_methods(const std::string& list, std::size_t sensors) {
  std::vector<MethodSpec> out;
  const auto push = [&](MethodSpec m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
    if (item.empty()) continue;
    if (item == "ff") {
      push(MethodSpec::ff());
    } else if (item == "ci") {
      push(MethodSpec::ci());
    } else if (item == "local") {
      for (std::size_t i = 0; i < sensors; ++i) push(MethodSpec::local(i));
    } else if (item.rfind("local", 0) == 0 && item.size() > 5 &&
               std::all_of(item.begin() + 5, item.end(), [](unsigned char c) { return std::isdigit(c); })) {
      const auto k = std::stoul(item.substr(5));
      if (k == 0 || k > sensors) throw ValidationError("method '" + item + "' names a sensor that does not exist");
      push(MethodSpec::local(k - 1));
    } else {
      throw ValidationError("unknown method '" + item + "' (expected ff, ci, local or localK)");
    }
  }
  if (out.empty()) throw ValidationError("no methods selected");
  return out;
}

FilterPass run_filter_pass(const Scenario& scenario, const MeasurementSet& measurements, const PassOptions& options) {
  const std::size_t sensors = scenario.sensors.size();
  if (measurements.size() != sensors) throw DomainError("measurement set does not match the sensor count");
  FilterPass pass;
  pass.locals.reserve(sensors);
  for (std::size_t i = 0; i < sensors; ++i)
    pass.locals.push_back(run_local_filter(scenario, i, measurements[i], options.filter));

  if (options.ff || options.with_bank) pass.bank = run_cross_bank(scenario, collect_gains(pass.locals));

  const auto n = scenario.state.dim();
  const std::size_t epochs = scenario.epochs.size();
  if (options.ff) pass.ff.reserve(epochs);
  if (options.ci) pass.ci.reserve(epochs);
  std::vector<MatrixXd> covs(sensors);
  std::vector<VectorXd> means(sensors);
  for (std::size_t k = 0; k < epochs; ++k) {
    for (std::size_t i = 0; i < sensors; ++i) {
      covs[i] = pass.locals[i].epochs[k].posterior.cov;
      means[i] = pass.locals[i].epochs[k].posterior.mean;
    }
    MatrixXd joint;
    if (pass.bank) joint = assemble_joint_covariance(covs, pass.bank->epochs[k]);
    const auto finish = [&](WeightSet ws) {
      FusionResult r;
      r.t = scenario.epochs[k];
      r.mean = fuse(ws, means);
      if (pass.bank) r.actual_cov = actual_fused_covariance(ws, joint);
      r.weightset = std::move(ws);
      return r;
    };
    if (options.ff) pass.ff.push_back(finish(ff_weights(joint, n, sensors)));
    if (options.ci) pass.ci.push_back(finish(ci_weights(covs)));
  }
  return pass;
}

MseAccumulator::MseAccumulator(std::size_t methods, std::size_t epochs, Eigen::Index dim)
    : sums_(methods, MatrixXd::Zero(static_cast<Eigen::Index>(epochs), dim)) {}

void MseAccumulator::add(std::size_t method, std::size_t epoch, const VectorXd& truth, const VectorXd& estimate) {
  sums_[method].row(static_cast<Eigen::Index>(epoch)) += (truth - estimate).array().square().matrix().transpose();
}

void MseAccumulator::merge(const MseAccumulator& other) {
  for (std::size_t m = 0; m < sums_.size(); ++m) sums_[m] += other.sums_[m];
  runs_ += other.runs_;
}

MatrixXd MseAccumulator::mean(std::size_t method) const {
  if (runs_ == 0) return MatrixXd::Zero(sums_[method].rows(), sums_[method].cols());
  return sums_[method] / static_cast<double>(runs_);
}

std::size_t MseSeries::index_of(const MethodSpec& m) const {
  const auto it = std::find(methods.begin(), methods.end(), m);
  if (it == methods.end()) throw DomainError("method " + m.name() + " not in series");
  return static_cast<std::size_t>(it - methods.begin());
}

std::size_t resolve_threads(std::size_t requested) {
  std::size_t threads = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FUSELAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) threads = std::min(threads, static_cast<std::size_t>(cap));
  }
  return threads;
}

namespace {

const VectorXd& estimate_of(const MethodSpec& m, const FilterPass& pass, std::size_t k) {
  switch (m.kind) {
    case MethodSpec::Kind::local:
      return pass.locals[m.sensor].epochs[k].posterior.mean;
    case MethodSpec::Kind::ff:
      return pass.ff[k].mean;
    case MethodSpec::Kind::ci:
      return pass.ci[k].mean;
  }
  throw DomainError("unknown method");
}

}  // namespace

MseSeries monte_carlo_mse(const Scenario& scenario, const std::vector<MethodSpec>& methods,
                          const MonteCarloOptions& options) {
  require_valid(scenario);
  if (scenario.mc_runs < 2) throw ValidationError("monte_carlo_mse needs at least 2 runs");
  if (static_cast<std::uint64_t>(scenario.mc_runs) > 0xFFFFFFFFull) throw ValidationError("too many runs");
  if (methods.empty()) throw ValidationError("no methods selected");
  for (const auto& m : methods) {
    if (m.kind == MethodSpec::Kind::local && m.sensor >= scenario.sensors.size())
      throw ValidationError("method " + m.name() + " names a sensor that does not exist");
  }

  PassOptions pass_options;
  pass_options.ff = std::find(methods.begin(), methods.end(), MethodSpec::ff()) != methods.end();
  pass_options.ci = std::find(methods.begin(), methods.end(), MethodSpec::ci()) != methods.end();
  pass_options.with_bank = options.with_bank;
  pass_options.filter = options.filter;

  const auto runs = static_cast<std::size_t>(scenario.mc_runs);
  const std::size_t epochs = scenario.epochs.size();
  const auto n = scenario.state.dim();

  MseSeries series;
  series.times = scenario.epochs;
  series.methods = methods;
  series.runs = runs;

  // One accumulator per run, reduced in run order afterwards.
  std::vector<MseAccumulator> per_run(runs, MseAccumulator(methods.size(), epochs, n));
  std::optional<FilterPass> first_pass;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t run = next++; run < runs; run = next++) {
      try {
        const auto truth = simulate_truth(scenario, static_cast<std::uint32_t>(run), options.truth);
        const auto measurements = generate_measurements(truth, scenario.sensors);
        auto pass = run_filter_pass(scenario, measurements, pass_options);
        auto& acc = per_run[run];
        for (std::size_t m = 0; m < methods.size(); ++m)
          for (std::size_t k = 0; k < epochs; ++k) acc.add(m, k, truth.states[k], estimate_of(methods[m], pass, k));
        acc.count_run();
        if (run == 0) first_pass = std::move(pass);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = runs;
      }
    }
  };

  const std::size_t threads = std::min(resolve_threads(options.threads), runs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  MseAccumulator total(methods.size(), epochs, n);
  for (const auto& acc : per_run) total.merge(acc);

  // Covariances and weights do not depend on the data, so run 0 stands for all.
  const FilterPass& pass = *first_pass;
  series.mse.resize(methods.size());
  series.reported.resize(methods.size());
  series.actual.resize(methods.size());
  series.weights.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    series.mse[m] = total.mean(m);
    const auto& method = methods[m];
    for (std::size_t k = 0; k < epochs; ++k) {
      if (method.kind == MethodSpec::Kind::local) {
        series.reported[m].push_back(pass.locals[method.sensor].epochs[k].posterior.cov);
        continue;
      }
      const auto& fused = method.kind == MethodSpec::Kind::ff ? pass.ff[k] : pass.ci[k];
      series.reported[m].push_back(fused.weightset.reported_cov);
      series.weights[m].push_back(fused.weightset);
      if (fused.actual_cov.size() > 0) series.actual[m].push_back(fused.actual_cov);
    }
  }
  return series;
}

}  // namespace fuselab
