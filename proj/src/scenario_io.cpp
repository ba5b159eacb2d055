#include "fuselab/errors.hpp"
#include "fuselab/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace fuselab {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 11> kTopLevelKeys = {
    "n", "F", "G", "Q", "x0", "P0", "dt", "seed", "mc_runs", "epochs", "sensors"};

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ParseError("unknown key '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing required key '" + std::string(key) + "' in " + where);
  return *it;
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ParseError(what + " must be a number");
  return v.get<double>();
}

// Accepts a bare number (1x1), a flat array (one row) or nested row-major arrays.
MatrixXd matrix(const json& v, const std::string& what) {
  if (v.is_number()) return MatrixXd::Constant(1, 1, v.get<double>());
  if (!v.is_array()) throw ParseError(what + " must be a number or an array");
  if (v.empty()) return MatrixXd(0, 0);
  if (!v.front().is_array()) {
    MatrixXd row(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t j = 0; j < v.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = number(v[j], what);
    return row;
  }
  const auto rows = v.size();
  const auto cols = v.front().size();
  MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw ParseError(what + " rows must all have the same length");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number(v[i][j], what);
  }
  return m;
}

VectorXd vector(const json& v, const std::string& what) {
  if (v.is_number()) return VectorXd::Constant(1, v.get<double>());
  if (!v.is_array()) throw ParseError(what + " must be a number or an array");
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], what);
  return out;
}

std::vector<double> epochs(const json& v) {
  if (v.is_array()) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& t : v) out.push_back(number(t, "epochs entry"));
    return out;
  }
  if (!v.is_object()) throw ParseError("epochs must be an array or {t0, step, count}");
  reject_unknown_keys(v, {"t0", "step", "count"}, "epochs");
  const auto& count = require(v, "count", "epochs");
  if (!count.is_number_integer() || count.get<std::int64_t>() < 0)
    throw ParseError("epochs.count must be a non-negative integer");
  return uniform_epochs(number(require(v, "t0", "epochs"), "epochs.t0"),
                        number(require(v, "step", "epochs"), "epochs.step"),
                        count.get<std::size_t>());
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed scenario file: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("scenario file must contain an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(kTopLevelKeys.begin(), kTopLevelKeys.end(),
                     [&](const char* k) { return key == k; }) == kTopLevelKeys.end())
      throw ParseError("unknown key '" + key + "' in scenario");
  }
  for (const char* key : kTopLevelKeys) require(doc, key, "scenario");

  const auto& n_json = doc["n"];
  if (!n_json.is_number_integer()) throw ParseError("n must be an integer");
  const auto n = n_json.get<std::int64_t>();

  const auto& seed_json = doc["seed"];
  if (!seed_json.is_number_unsigned() && !(seed_json.is_number_integer() && seed_json.get<std::int64_t>() >= 0))
    throw ParseError("seed must be a non-negative integer");
  const auto& runs_json = doc["mc_runs"];
  if (!runs_json.is_number_integer()) throw ParseError("mc_runs must be an integer");

  const auto& sensors_json = doc["sensors"];
  if (!sensors_json.is_array()) throw ParseError("sensors must be an array");
  std::vector<SensorModel> sensors;
  for (std::size_t i = 0; i < sensors_json.size(); ++i) {
    const auto& entry = sensors_json[i];
    const auto where = "sensors[" + std::to_string(i) + "]";
    if (!entry.is_object()) throw ParseError(where + " must be an object");
    reject_unknown_keys(entry, {"H", "R"}, where);
    sensors.push_back({matrix(require(entry, "H", where), where + ".H"),
                       matrix(require(entry, "R", where), where + ".R")});
  }

  Scenario s{StateModel(matrix(doc["F"], "F"), matrix(doc["G"], "G"), matrix(doc["Q"], "Q")),
             InitialBelief{vector(doc["x0"], "x0"), matrix(doc["P0"], "P0")},
             std::move(sensors),
             epochs(doc["epochs"]),
             number(doc["dt"], "dt"),
             runs_json.get<std::int64_t>(),
             seed_json.get<std::uint64_t>()};
  if (n != s.state.dim()) {
    throw ValidationError("invalid scenario: n_mismatch (n=" + std::to_string(n) + " but F is " +
                          std::to_string(s.state.dim()) + "-dimensional)");
  }
  require_valid(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading scenario file " + path.string());
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  if (!s.state.time_invariant()) throw ValidationError("only time-invariant models can be serialized");
  json doc;
  doc["n"] = s.state.dim();
  doc["F"] = to_json(s.state.drift_matrix());
  doc["G"] = to_json(s.state.noise_gain());
  doc["Q"] = to_json(s.state.intensity());
  doc["x0"] = to_json(s.initial.mean);
  doc["P0"] = to_json(s.initial.cov);
  doc["dt"] = s.dt;
  doc["seed"] = s.seed;
  doc["mc_runs"] = s.mc_runs;
  doc["epochs"] = s.epochs;
  json sensors = json::array();
  for (const auto& sensor : s.sensors) sensors.push_back({{"H", to_json(sensor.H)}, {"R", to_json(sensor.R)}});
  doc["sensors"] = std::move(sensors);
  return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scenario file " + path.string());
  out << serialize_scenario(s);
  if (!out) throw IoError("error writing scenario file " + path.string());
}

}  // namespace fuselab
