#include "fuselab/model.hpp"

#include "fuselab/errors.hpp"

#include <cmath>
#include <sstream>

namespace fuselab {

namespace {

std::string sensor_arg(std::size_t i) { return "sensor=" + std::to_string(i + 1); }

std::string shape(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

class ViolationList {
 public:
  void add(std::string code, std::string argument, std::string message) {
    items_.push_back({std::move(code), std::move(argument), std::move(message)});
  }
  std::vector<Violation> take() { return std::move(items_); }

 private:
  std::vector<Violation> items_;
};

// Checks shared by Q, P0 and R: finite, symmetric, then the definiteness test.
enum class Definiteness { semidefinite, definite };

bool check_covariance(ViolationList& out, const MatrixXd& m, const std::string& name,
                      const std::string& argument, Definiteness kind) {
  if (!m.allFinite()) {
    out.add(name + "_not_finite", argument, name + " contains non-finite entries");
    return false;
  }
  if (!is_symmetric(m)) {
    out.add(name + "_not_symmetric", argument, name + " is not symmetric");
    return false;
  }
  if (kind == Definiteness::definite) {
    if (!is_positive_definite(m)) {
      out.add(name + "_not_positive_definite", argument, name + " is not positive definite");
      return false;
    }
  } else if (!is_psd(m)) {
    out.add(name + "_not_psd", argument, name + " is not positive semidefinite");
    return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
  ViolationList out;
  const auto n = s.state.dim();
  if (n <= 0) {
    out.add("n_not_positive", "", "state dimension must be positive");
    return out.take();
  }

  const double t_first = s.epochs.empty() ? 0.0 : s.epochs.front();
  const MatrixXd f = s.state.drift(t_first);
  if (f.rows() != n || f.cols() != n) {
    out.add("F_shape", "", "F must be " + std::to_string(n) + "x" + std::to_string(n) + ", got " + shape(f));
  } else if (!f.allFinite()) {
    out.add("F_not_finite", "", "F contains non-finite entries");
  }

  const auto& g = s.state.noise_gain();
  const auto& q = s.state.intensity();
  if (g.rows() != n || g.cols() == 0) {
    out.add("G_shape", "", "G must have " + std::to_string(n) + " rows, got " + shape(g));
  } else if (!g.allFinite()) {
    out.add("G_not_finite", "", "G contains non-finite entries");
  }
  if (q.rows() != g.cols() || q.cols() != g.cols()) {
    out.add("Q_shape", "", "Q must be " + std::to_string(g.cols()) + "x" + std::to_string(g.cols()) + ", got " + shape(q));
  } else {
    check_covariance(out, q, "Q", "", Definiteness::semidefinite);
  }

  if (s.initial.mean.size() != n) {
    out.add("x0_shape", "", "x0 must have length " + std::to_string(n));
  } else if (!s.initial.mean.allFinite()) {
    out.add("x0_not_finite", "", "x0 contains non-finite entries");
  }
  if (s.initial.cov.rows() != n || s.initial.cov.cols() != n) {
    out.add("P0_shape", "", "P0 must be " + std::to_string(n) + "x" + std::to_string(n) + ", got " + shape(s.initial.cov));
  } else {
    check_covariance(out, s.initial.cov, "P0", "", Definiteness::semidefinite);
  }

  if (s.sensors.empty()) out.add("no_sensors", "", "at least one sensor is required");
  for (std::size_t i = 0; i < s.sensors.size(); ++i) {
    const auto& sensor = s.sensors[i];
    const auto arg = sensor_arg(i);
    if (sensor.H.cols() != n || sensor.H.rows() == 0) {
      out.add("H_shape", arg, "H must have " + std::to_string(n) + " columns, got " + shape(sensor.H));
      continue;
    }
    if (!sensor.H.allFinite()) out.add("H_not_finite", arg, "H contains non-finite entries");
    if (sensor.R.rows() != sensor.H.rows() || sensor.R.cols() != sensor.H.rows()) {
      out.add("R_shape", arg, "R must be " + std::to_string(sensor.H.rows()) + "x" + std::to_string(sensor.H.rows()) + ", got " + shape(sensor.R));
      continue;
    }
    check_covariance(out, sensor.R, "R", arg, Definiteness::definite);
  }

  if (s.epochs.empty()) out.add("no_epochs", "", "at least one epoch is required");
  double min_gap = INFINITY;
  for (std::size_t k = 0; k < s.epochs.size(); ++k) {
    if (!std::isfinite(s.epochs[k])) {
      out.add("epoch_not_finite", "index=" + std::to_string(k), "epoch time is not finite");
      continue;
    }
    if (k == 0) continue;
    const double gap = s.epochs[k] - s.epochs[k - 1];
    if (!(gap > 0)) {
      out.add("epochs_not_strictly_increasing", "index=" + std::to_string(k),
              "epoch " + std::to_string(k) + " does not follow epoch " + std::to_string(k - 1));
    } else {
      min_gap = std::min(min_gap, gap);
    }
  }

  if (!(s.dt > 0) || !std::isfinite(s.dt)) {
    out.add("dt_not_positive", "", "dt must be positive");
  } else if (std::isfinite(min_gap) && s.dt > min_gap * (1 + 1e-12)) {
    out.add("dt_exceeds_epoch_gap", "", "dt must not exceed the smallest epoch gap");
  }
  if (s.mc_runs <= 0) out.add("mc_runs_not_positive", "", "mc_runs must be positive");
  return out.take();
}

void require_valid(const Scenario& s) {
  const auto violations = validate_scenario(s);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid scenario:";
  for (const auto& v : violations) msg << ' ' << v.tag();
  throw ValidationError(msg.str());
}

std::vector<double> uniform_epochs(double t0, double step, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = t0 + static_cast<double>(k) * step;
  return out;
}

bool same_scenario(const Scenario& a, const Scenario& b) {
  const auto eq = [](const MatrixXd& x, const MatrixXd& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  const double t = a.epochs.empty() ? 0.0 : a.epochs.front();
  if (a.state.dim() != b.state.dim()) return false;
  if (!eq(a.state.drift(t), b.state.drift(t)) || !eq(a.state.noise_gain(), b.state.noise_gain()) ||
      !eq(a.state.intensity(), b.state.intensity()))
    return false;
  if (!eq(a.initial.mean, b.initial.mean) || !eq(a.initial.cov, b.initial.cov)) return false;
  if (a.sensors.size() != b.sensors.size()) return false;
  for (std::size_t i = 0; i < a.sensors.size(); ++i) {
    if (!eq(a.sensors[i].H, b.sensors[i].H) || !eq(a.sensors[i].R, b.sensors[i].R)) return false;
  }
  return a.epochs == b.epochs && a.dt == b.dt && a.mc_runs == b.mc_runs && a.seed == b.seed;
}

Scenario with_replicated_sensors(const Scenario& s, std::size_t count) {
  if (s.sensors.empty()) throw ValidationError("cannot replicate an empty sensor list");
  Scenario out = s;
  out.sensors.clear();
  out.sensors.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.sensors.push_back(s.sensors[k % s.sensors.size()]);
  return out;
}

}  // namespace fuselab
