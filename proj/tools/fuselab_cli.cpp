// fuselab: steady-state check, Monte Carlo MSE study and FF/CI timing.

#include "fuselab/bench.hpp"
#include "fuselab/csv.hpp"
#include "fuselab/errors.hpp"
#include "fuselab/model.hpp"
#include "fuselab/simulator.hpp"
#include "fuselab/steady_state.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace fuselab;

enum ExitCode { kOk = 0, kValidation = 1, kParse = 2, kNumeric = 3 };

struct ScenarioFlags {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> mc_runs;
  std::optional<double> dt;

  void attach(CLI::App* cmd) {
    cmd->add_option("--scenario", path, "Scenario file (JSON)")->required();
    cmd->add_option("--seed", seed, "Override the root RNG seed");
    cmd->add_option("--mc-runs", mc_runs, "Override the Monte Carlo run count");
    cmd->add_option("--dt", dt, "Override the integrator step");
  }

  Scenario load() const {
    Scenario s = load_scenario(path);
    if (seed) s.seed = *seed;
    if (mc_runs) s.mc_runs = *mc_runs;
    if (dt) s.dt = *dt;
    require_valid(s);
    return s;
  }
};

std::vector<std::size_t> parse_counts(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v <= 0) throw ValidationError("invalid sensor count '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ValidationError("no sensor counts given");
  return out;
}

void print_report(const SteadyStateReport& s) {
  std::cout << "q = " << format_double(s.q) << "\n"
            << "r1 = " << format_double(s.r1) << "\n"
            << "r2 = " << format_double(s.r2) << "\n"
            << "P11 = " << format_double(s.p11) << "\n"
            << "P22 = " << format_double(s.p22) << "\n"
            << "P12 = " << format_double(s.p12) << "\n"
            << "C1 = " << format_double(s.c1) << "\n"
            << "C2 = " << format_double(s.c2) << "\n"
            << "W1 = " << format_double(s.w1) << "\n"
            << "W2 = " << format_double(s.w2) << "\n"
            << "P_FF = " << format_double(s.p_ff) << "\n"
            << "P_CI = " << format_double(s.p_ci) << "\n"
            << "ci_relative_excess = " << format_double(ci_relative_excess(s)) << "\n";
}

int cmd_steady_state(double q, double r1, double r2, bool check, const std::string& out_dir) {
  const auto report = steady_state(q, r1, r2);
  print_report(report);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_text_file(std::filesystem::path(out_dir) / "steady_state.csv", steady_state_csv(report));
  }
  if (!check) return kOk;
  if (q != 1 || r1 != 5 || r2 != 2) throw ValidationError("--check needs --q 1 --r1 5 --r2 2");
  constexpr double kTol = 5e-5;
  const bool ok = std::abs(report.p_ff - 0.3896) <= kTol && std::abs(report.p_ci - 0.3925) <= kTol;
  std::cout << "check: " << (ok ? "PASS" : "FAIL") << " (expected P_FF = 0.3896, P_CI = 0.3925)\n";
  return ok ? kOk : kNumeric;
}

int cmd_simulate(const ScenarioFlags& flags, const std::string& methods_list, const std::string& out_dir,
                 const std::string& truth_mode, bool joseph) {
  const Scenario scenario = flags.load();
  MonteCarloOptions options;
  if (truth_mode == "exact") {
    options.truth = TruthDiscretization::exact;
  } else if (truth_mode != "em") {
    throw ValidationError("--truth must be 'em' or 'exact'");
  }
  options.filter.joseph_form = joseph;
  const auto methods = parse_methods(methods_list, scenario.sensor_count());
  const auto series = monte_carlo_mse(scenario, methods, options);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto name = methods[m].name();
    write_text_file(dir / ("mse_" + name + ".csv"), mse_csv(series, m));
    if (methods[m].kind != MethodSpec::Kind::local)
      write_text_file(dir / ("weights_" + name + ".csv"), weights_csv(series, m));
  }
  std::cout << "wrote " << methods.size() << " method(s), " << series.times.size() << " epochs, " << series.runs
            << " runs to " << out_dir << "\n";
  return kOk;
}

int cmd_bench(const ScenarioFlags& flags, const std::string& counts, std::size_t repeats, const std::string& out_dir) {
  const Scenario scenario = flags.load();
  const auto csv = timing_csv(run_bench(scenario, parse_counts(counts), repeats));
  if (out_dir.empty()) {
    std::cout << csv;
  } else {
    std::filesystem::create_directories(out_dir);
    write_text_file(std::filesystem::path(out_dir) / "timing.csv", csv);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "timing.csv").string() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-discrete multisensor fusion filtering toolkit"};
  app.require_subcommand(1);

  double q = 0, r1 = 0, r2 = 0;
  bool check = false;
  std::string ss_out;
  auto* ss = app.add_subcommand("steady-state", "Closed-form scalar two-sensor steady state");
  ss->add_option("--q", q, "Process noise intensity")->required();
  ss->add_option("--r1", r1, "Sensor 1 noise variance")->required();
  ss->add_option("--r2", r2, "Sensor 2 noise variance")->required();
  ss->add_flag("--check", check, "Compare against P_FF = 0.3896, P_CI = 0.3925 (q=1, r1=5, r2=2)");
  ss->add_option("--out", ss_out, "Directory for steady_state.csv");

  ScenarioFlags sim_flags;
  std::string methods = "ff,ci,local", sim_out, truth_mode = "em";
  bool joseph = false;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo MSE study");
  sim_flags.attach(sim);
  sim->add_option("--methods", methods, "Comma list of ff, ci, local, localK");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--truth", truth_mode, "Truth discretization: em or exact");
  sim->add_flag("--joseph", joseph, "Joseph-form covariance update");

  ScenarioFlags bench_flags;
  std::string counts = "3,6", bench_out;
  std::size_t repeats = 5;
  auto* bench = app.add_subcommand("bench", "FF vs CI timing sweep");
  bench_flags.attach(bench);
  bench->add_option("--sensor-counts", counts, "Comma list of sensor counts");
  bench->add_option("--repeats", repeats, "Repeats per sensor count");
  bench->add_option("--out", bench_out, "Directory for timing.csv (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    if (*ss) return cmd_steady_state(q, r1, r2, check, ss_out);
    if (*sim) return cmd_simulate(sim_flags, methods, sim_out, truth_mode, joseph);
    if (*bench) return cmd_bench(bench_flags, counts, repeats, bench_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  }
  return kOk;
}
