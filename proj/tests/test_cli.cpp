#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = FUSELAB_CLI;
const std::string kDir = FUSELAB_SCENARIO_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fuselab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run(const std::string& args, const std::string& env = "") {
  const auto dir = fs::temp_directory_path();
  const auto out = dir / "fuselab_cli_stdout.txt";
  const auto err = dir / "fuselab_cli_stderr.txt";
  const std::string cmd = env + " '" + kCli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

std::size_t data_rows(const std::string& csv) {
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  return lines - 1;
}

}  // namespace

TEST_CASE("steady-state --check passes on the published case") {
  const auto r = run("steady-state --q 1 --r1 5 --r2 2 --check");
  CHECK(r.code == 0);
  CHECK(r.out.find("P_FF = 0.3896") != std::string::npos);
  CHECK(r.out.find("check: PASS") != std::string::npos);
}

TEST_CASE("steady-state symmetric case and CSV") {
  const auto dir = scratch("ss");
  const auto r = run("steady-state --q 1 --r1 2 --r2 2 --out '" + dir.string() + "'");
  CHECK(r.code == 0);
  CHECK(r.out.find("C1 = 0.5\n") != std::string::npos);
  CHECK(r.out.find("C2 = 0.5\n") != std::string::npos);
  const auto csv = slurp(dir / "steady_state.csv");
  CHECK(csv.rfind("q,r1,r2,P11,P22,P12,C1,C2,W1,W2,P_FF,P_CI,ci_relative_excess\n", 0) == 0);
  CHECK(data_rows(csv) == 1);
}

TEST_CASE("steady-state domain error") {
  const auto r = run("steady-state --q 0 --r1 1 --r2 1");
  CHECK(r.code == 1);
  CHECK(r.err.find("q must be positive") != std::string::npos);
}

TEST_CASE("argument and file errors use exit code 2") {
  CHECK(run("steady-state --q 1").code == 2);
  CHECK(run("simulate --scenario /nonexistent.json --out /tmp/x").code == 2);
  const auto dir = scratch("bad");
  std::ofstream(dir / "bad.json") << "{\"n\": 1";
  CHECK(run("simulate --scenario '" + (dir / "bad.json").string() + "' --out '" + dir.string() + "'").code == 2);
}

TEST_CASE("invalid scenario values use exit code 1") {
  const auto dir = scratch("invalid");
  auto text = slurp(kDir + "/scalar_two_sensor.json");
  text.replace(text.find("\"Q\": [[1.0]]"), 12, "\"Q\": [[-1.0]]");
  std::ofstream(dir / "neg_q.json") << text;
  const auto r = run("simulate --scenario '" + (dir / "neg_q.json").string() + "' --out '" + dir.string() + "'");
  CHECK(r.code == 1);
  CHECK(r.err.find("Q_not_psd") != std::string::npos);
  CHECK(run("simulate --scenario '" + kDir + "/oscillator.json' --dt -1 --out '" + dir.string() + "'").code == 1);
}

TEST_CASE("simulate writes MSE and weight CSVs deterministically") {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  const std::string base = "simulate --scenario '" + kDir + "/oscillator.json' --mc-runs 50 --methods ff,ci,local";
  REQUIRE(run(base + " --out '" + a.string() + "'", "FUSELAB_THREADS=1").code == 0);
  REQUIRE(run(base + " --out '" + b.string() + "'", "FUSELAB_THREADS=3").code == 0);
  for (const char* name : {"mse_ff.csv", "mse_ci.csv", "weights_ff.csv", "weights_ci.csv", "mse_local1.csv",
                           "mse_local2.csv", "mse_local3.csv"}) {
    CAPTURE(name);
    const auto text = slurp(a / name);
    CHECK(data_rows(text) == 51);
    CHECK(text == slurp(b / name));
  }
  CHECK(slurp(a / "mse_ff.csv").rfind("t,mse_x1,mse_x2\n", 0) == 0);
  CHECK(slurp(a / "weights_ci.csv").rfind("t,W1_11,W1_12,W1_21,W1_22,W2_11", 0) == 0);
  CHECK_FALSE(fs::exists(a / "weights_local1.csv"));
}

TEST_CASE("simulate rejects unknown methods") {
  const auto dir = scratch("methods");
  const auto r = run("simulate --scenario '" + kDir + "/oscillator.json' --mc-runs 5 --methods ff,foo --out '" +
                     dir.string() + "'");
  CHECK(r.code == 1);
}

TEST_CASE("bench emits the timing table") {
  const auto dir = scratch("bench");
  const auto r = run("bench --scenario '" + kDir + "/oscillator.json' --sensor-counts 3,6 --repeats 2 --out '" +
                     dir.string() + "'");
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "timing.csv");
  CHECK(csv.rfind("N,method,median_seconds,ode_props", 0) == 0);
  CHECK(data_rows(csv) == 4);
  CHECK(csv.find("\n6,ff,") != std::string::npos);
  CHECK(run("bench --scenario '" + kDir + "/oscillator.json' --sensor-counts 0").code == 1);
}
