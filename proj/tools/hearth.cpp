#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hearth/config.hpp"
#include "hearth/sim.hpp"

using namespace hearth;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SetupArgs {
  std::string catalog, apps, config;
  Tick delay = 0;

  SimulationSetup build() const {
    SimulationSetup s;
    if (!catalog.empty()) s.catalog = load_catalog(catalog);
    if (!apps.empty()) s.apps = load_apps(apps);
    if (!config.empty()) s.config = load_config(config);
    s.identification_delay = delay;
    return s;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--catalog", catalog, "device catalog JSON (default home if omitted)");
    cmd->add_option("--apps", apps, "app rules JSON (built-in apps if omitted)");
    cmd->add_option("--config", config, "handler configuration JSON");
    cmd->add_option("--delay", delay, "identification delay in ticks");
  }
};

std::string run_file_name(const RunMetrics& m) {
  std::string name = std::string("run_") + mode_letter(m.mode);
  if (!m.scheme.empty()) name += "_" + m.scheme;
  return name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart-home fault handling simulator"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  Tick ticks = 50000;
  std::string out;
  auto* gen_trace = app.add_subcommand("gen-trace", "generate a sensor trace for the default home");
  gen_trace->add_option("--seed", seed);
  gen_trace->add_option("--ticks", ticks);
  gen_trace->add_option("--out", out)->required();

  std::string profile = "single";
  std::string catalog_for_faults;
  auto* gen_faults = app.add_subcommand("gen-faults", "generate a random fault schedule");
  gen_faults->add_option("--seed", seed);
  gen_faults->add_option("--ticks", ticks);
  gen_faults->add_option("--profile", profile)->check(CLI::IsMember({"single", "multiple"}));
  gen_faults->add_option("--catalog", catalog_for_faults);
  gen_faults->add_option("--out", out)->required();

  std::string trace_path, faults_path, mode = "d", scheme, report_dir = "reports";
  SetupArgs setup_args;
  auto* run = app.add_subcommand("run", "run one mode and write its report row");
  run->add_option("--trace", trace_path)->required();
  run->add_option("--faults", faults_path)->required();
  run->add_option("--mode", mode)->check(CLI::IsMember({"a", "b", "c", "d"}));
  run->add_option("--scheme", scheme, "FullHandler: scheme applied to every device");
  run->add_option("--report-dir", report_dir);
  setup_args.add_to(run);

  std::vector<std::string> schemes;
  auto* suite = app.add_subcommand("suite", "run every mode and the given schemes, then write the report");
  suite->add_option("--trace", trace_path)->required();
  suite->add_option("--faults", faults_path)->required();
  suite->add_option("--schemes", schemes)->delimiter(',');
  suite->add_option("--report-dir", report_dir);
  setup_args.add_to(suite);

  std::string runs_dir;
  auto* compare = app.add_subcommand("compare", "merge run rows into report.csv and summary.txt");
  compare->add_option("--runs", runs_dir)->required();

  std::string cost_path;
  auto* latency = app.add_subcommand("latency", "analytic handling-latency tables");
  latency->add_option("--cost-model", cost_path);
  latency->add_option("--out", out, "write the long-format CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_trace) {
      write_trace(out, generate_trace(seed, ticks));
    } else if (*gen_faults) {
      const Registry reg(catalog_for_faults.empty() ? default_home_catalog() : load_catalog(catalog_for_faults));
      const auto p = profile == "single" ? FaultProfile::single() : FaultProfile::multiple();
      write_fault_schedule(out, generate_fault_schedule(seed, p, reg, ticks));
    } else if (*run) {
      const auto setup = setup_args.build();
      const auto trace = read_trace(trace_path);
      const Registry reg(setup.catalog);
      const auto faults = parse_fault_schedule(faults_path, reg);
      const auto kind = *run_kind_from_letter(mode);
      if (kind != RunKind::FullHandler && !scheme.empty())
        throw ValidationError("scheme", "only mode d takes a scheme");

      const auto base = run_simulation(trace, {RunKind::Baseline, ""}, faults, setup);
      std::optional<RunResult> none;
      if (kind == RunKind::SuppressionOnly || kind == RunKind::FullHandler)
        none = run_simulation(trace, {RunKind::NoHandler, ""}, faults, setup);
      auto result = run_simulation(trace, {kind, scheme}, faults, setup);
      const auto c = count_incorrect_states(result.history, base.history, none ? &none->history : nullptr);
      result.metrics.incorrect_states = c.total;
      result.metrics.handler_caused_incorrect = c.handler_caused;

      std::filesystem::create_directories(report_dir);
      const auto stem = run_file_name(result.metrics);
      std::ofstream(std::filesystem::path(report_dir) / (stem + ".csv")) << report_csv({result.metrics});
      std::ofstream log(std::filesystem::path(report_dir) / (stem + "_notifications.log"));
      for (const auto& n : result.notifications) log << NotificationSink::format(n) << '\n';
      std::cout << report_summary({result.metrics});
    } else if (*suite) {
      const auto setup = setup_args.build();
      const auto trace = read_trace(trace_path);
      const Registry reg(setup.catalog);
      const auto faults = parse_fault_schedule(faults_path, reg);
      if (schemes.empty()) {
        for (const auto& s : builtin_schemes()) schemes.push_back(s.name);
      }
      const auto result = run_suite(trace, faults, schemes, setup);
      emit_report(report_dir, result.runs);
      std::cout << report_summary(result.runs);
    } else if (*compare) {
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(runs_dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("run_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw ValidationError("runs", "no run_*.csv files in " + runs_dir);
      std::vector<RunMetrics> runs;
      for (const auto& f : files) {
        for (auto& m : parse_report_csv(slurp(f))) runs.push_back(std::move(m));
      }
      std::stable_sort(runs.begin(), runs.end(), [](const RunMetrics& a, const RunMetrics& b) { return a.mode < b.mode; });
      emit_report(runs_dir, runs);
      std::cout << report_summary(runs);
    } else if (*latency) {
      const CostModel cost = cost_path.empty() ? CostModel{} : load_cost_model(cost_path);
      const auto tables = compute_latencies(cost, default_home_catalog(), builtin_schemes());
      if (!out.empty()) std::ofstream(out) << latency_csv(tables);
      std::cout << latency_summary(tables);
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const UnknownDevice& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
