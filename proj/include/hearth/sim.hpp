#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hearth/app.hpp"
#include "hearth/config.hpp"
#include "hearth/device.hpp"
#include "hearth/fault.hpp"
#include "hearth/handler.hpp"

namespace hearth {

// --- traces ---------------------------------------------------------------

struct EnvironmentTrace {
  Tick ticks = 0;
  std::uint64_t seed = 0;
  std::map<DeviceId, std::vector<Value>> streams;
};

// Ground truth for the seven default-home sensors. Tick 0 is midnight.
EnvironmentTrace generate_trace(std::uint64_t seed, Tick ticks);

// CSV: `tick,<id>,<id>,...` then one row per tick.
void write_trace(const std::filesystem::path& path, const EnvironmentTrace& trace);
EnvironmentTrace read_trace(const std::filesystem::path& path);

// --- runs -----------------------------------------------------------------

enum class RunKind { Baseline, NoHandler, SuppressionOnly, FullHandler };
std::string_view to_string(RunKind k);
// 'a'..'d'
char mode_letter(RunKind k);
std::optional<RunKind> run_kind_from_letter(std::string_view s);

struct RunMode {
  RunKind kind = RunKind::Baseline;
  // FullHandler only: overrides every device's scheme when set.
  std::string scheme;
};

struct SimulationSetup {
  std::vector<DeviceSpec> catalog = default_home_catalog();
  std::vector<AppSpec> apps = builtin_apps();
  // Falls back to default_home_config.
  std::optional<ConfigFile> config;
  Tick identification_delay = 0;
  TransformParams transform;
};

// Per-tick observed value and responsiveness of every device.
struct History {
  std::vector<DeviceId> devices;
  Tick ticks = 0;
  std::vector<Value> values;               // tick-major
  std::vector<std::uint8_t> responsive;    // tick-major

  std::size_t index(Tick t, std::size_t d) const { return static_cast<std::size_t>(t) * devices.size() + d; }
  Value value(Tick t, std::size_t d) const { return values[index(t, d)]; }
  std::vector<Value> stream(DeviceId id) const;
};

struct DeviceCounters {
  std::uint64_t events_dispatched = 0;
  std::uint64_t events_suppressed = 0;
  std::uint64_t actuations = 0;
  std::uint64_t restarts = 0;
  double restart_ms = 0.0;
};

struct RunMetrics {
  RunKind mode = RunKind::Baseline;
  std::string scheme;
  std::uint64_t incorrect_states = 0;
  std::uint64_t handler_caused_incorrect = 0;
  std::uint64_t events = 0;
  std::uint64_t events_dispatched = 0;
  std::uint64_t events_suppressed = 0;
  std::uint64_t actuations = 0;
  std::uint64_t restarts = 0;
  double energy_mj = 0.0;
  std::uint64_t sessions = 0;
  std::uint64_t repaired = 0;
  std::uint64_t unrepaired = 0;
  std::uint64_t rollbacks = 0;
  std::uint64_t rollback_successes = 0;
  std::uint64_t rollback_actuations = 0;
  std::map<DeviceId, std::uint64_t> incorrect_by_device;
};

struct RunResult {
  RunMetrics metrics;
  History history;
  std::map<DeviceId, DeviceCounters> counters;
  std::vector<NotificationRecord> notifications;
  std::vector<HandlerSession> sessions;
};

struct CostModel {
  double cpu_op_ms = 0.001;
  double device_command_ms = 6.0;
  double actuation_duration_ms = 1000.0;
  // Retry enumeration: transient faults clear within this bound.
  double transient_max_ms = 1000.0;
  double retry_timeout_ms = 30000.0;
  double identification_bound_ms = 5000.0;
  int restart_attempts = 3;

  bool operator==(const CostModel&) const = default;
};
CostModel parse_cost_model(const std::string& json_text);
CostModel load_cost_model(const std::filesystem::path& path);
std::string cost_model_to_json(const CostModel& m);

// Runs the trace through one mode. Incorrect-state fields stay zero; see
// count_incorrect_states and run_suite.
RunResult run_simulation(const EnvironmentTrace& trace, const RunMode& mode, const std::vector<FaultSpec>& faults,
                         const SimulationSetup& setup = {}, const CostModel& cost = {});

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

struct IncorrectCount {
  std::uint64_t total = 0;
  std::uint64_t handler_caused = 0;
  std::map<DeviceId, std::uint64_t> by_device;
};

// (device, tick) pairs differing from the baseline. With `no_handler`, also
// counts pairs wrong in `run` but right without a handler.
IncorrectCount count_incorrect_states(const History& run, const History& baseline,
                                      const History* no_handler = nullptr);

struct EnergyInputs {
  std::map<DeviceId, std::uint64_t> events;
  std::map<DeviceId, std::uint64_t> actuations;
  std::map<DeviceId, double> restart_ms;
};

// Millijoules: mW x ms / 1000.
double compute_energy(const EnergyInputs& in, const std::vector<DeviceSpec>& catalog, const CostModel& cost);

// Baseline, NoHandler, SuppressionOnly, and FullHandler per scheme, with
// incorrect states filled in against the baseline.
struct SuiteResult {
  std::vector<RunMetrics> runs;
  const RunMetrics* find(RunKind k, const std::string& scheme = "") const;
};
SuiteResult run_suite(const EnvironmentTrace& trace, const std::vector<FaultSpec>& faults,
                      const std::vector<std::string>& schemes, const SimulationSetup& setup = {},
                      const CostModel& cost = {});

// --- latency ----------------------------------------------------------------

struct LatencyStat {
  std::string function;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
  std::size_t samples = 0;
  double cv() const { return mean_ms == 0.0 ? 0.0 : stddev_ms / mean_ms; }
};

struct SchemeHandleTime {
  std::string scheme;
  FaultKind kind = FaultKind::StuckAt;
  double mean_ms = 0.0;
  double repaired_fraction = 0.0;
  bool unrepairable = false;
};

struct LatencyTables {
  std::vector<LatencyStat> functions;
  std::vector<SchemeHandleTime> handle_times;
  std::map<std::string, double> rollback_ms_by_scheme;
  const LatencyStat* function(const std::string& name) const;
};

LatencyTables compute_latencies(const CostModel& cost, const std::vector<DeviceSpec>& catalog,
                                const std::vector<Scheme>& schemes, const ConfigFile* config = nullptr);

// --- reports ----------------------------------------------------------------

double reduction(double reference, double value);
std::string report_csv(const std::vector<RunMetrics>& runs);
std::vector<RunMetrics> parse_report_csv(const std::string& text);
std::string report_summary(const std::vector<RunMetrics>& runs);
std::string latency_csv(const LatencyTables& t);
std::string latency_summary(const LatencyTables& t);
// Writes report.csv and summary.txt into `dir`.
void emit_report(const std::filesystem::path& dir, const std::vector<RunMetrics>& runs);

}  // namespace hearth
