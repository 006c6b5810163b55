#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "hearth/sim.hpp"

using namespace hearth;
using namespace hearth::home;

namespace {

const std::filesystem::path kData = HEARTH_DATA_DIR;

double pearson(const std::vector<Value>& a, const std::vector<Value>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

History flat(std::vector<DeviceId> devices, Tick ticks, Value v = 0) {
  History h;
  h.devices = std::move(devices);
  h.ticks = ticks;
  h.values.assign(h.devices.size() * static_cast<std::size_t>(ticks), v);
  h.responsive.assign(h.values.size(), 1);
  return h;
}

EnvironmentTrace head(const EnvironmentTrace& tr, Tick ticks) {
  auto out = tr;
  out.ticks = ticks;
  for (auto& [id, s] : out.streams) s.resize(static_cast<std::size_t>(ticks));
  return out;
}

const EnvironmentTrace& trace() {
  static const auto tr = read_trace(kData / "trace.csv");
  return tr;
}

}  // namespace

TEST_CASE("trace generation is seeded and covers every sensor") {
  const auto a = generate_trace(3, 20000);
  const auto b = generate_trace(3, 20000);
  CHECK(a.streams == b.streams);
  CHECK(a.streams != generate_trace(4, 20000).streams);
  CHECK(a.streams.size() == 7);
  for (const auto& [id, s] : a.streams) CHECK(s.size() == 20000u);
  CHECK(a.streams.at(kSmoke) == a.streams.at(kSmokeReplica));
  CHECK_THROWS_AS(generate_trace(1, 0), ValidationError);

  const auto path = std::filesystem::temp_directory_path() / "hearth_trace_test.csv";
  write_trace(path, a);
  const auto back = read_trace(path);
  CHECK(back.streams == a.streams);
  CHECK(back.seed == 3);
  std::filesystem::remove(path);
}

TEST_CASE("shipped trace correlates motion with presence") {
  const auto& tr = trace();
  CHECK(tr.ticks == 50000);
  CHECK(pearson(tr.streams.at(kMotion), tr.streams.at(kPresence)) > 0.5);
}

TEST_CASE("incorrect-state counting") {
  const std::vector<DeviceId> ids{kMotion, kHeater};
  const auto base = flat(ids, 50);
  CHECK(count_incorrect_states(base, base).total == 0);

  auto run = base;
  for (Tick t = 20; t < 30; ++t) run.values[run.index(t, 1)] = 1;
  const auto c = count_incorrect_states(run, base);
  CHECK(c.total == 10);
  CHECK(c.by_device.at(kHeater) == 10);

  auto silent = base;
  for (Tick t = 0; t < 4; ++t) silent.responsive[silent.index(t, 0)] = 0;
  CHECK(count_incorrect_states(silent, base).total == 4);
  CHECK(count_incorrect_states(silent, silent).total == 0);

  CHECK_THROWS_AS(count_incorrect_states(flat(ids, 49), base), ShapeMismatch);
  CHECK_THROWS_AS(count_incorrect_states(flat({kMotion}, 50), base), ShapeMismatch);
}

TEST_CASE("handler-caused states when the unhandled run is right by coincidence") {
  // A faulty temperature turned the heater on without a handler; later the
  // room really cooled, so that heater state became correct while the
  // handler kept it off.
  const std::vector<DeviceId> ids{kTemperature, kHeater};
  auto base = flat(ids, 100);
  auto none = base;
  auto full = base;
  for (Tick t = 10; t < 100; ++t) none.values[none.index(t, 1)] = 1;
  for (Tick t = 60; t < 100; ++t) base.values[base.index(t, 1)] = 1;
  const auto c = count_incorrect_states(full, base, &none);
  CHECK(c.total == 40);
  CHECK(c.handler_caused == 40);
  CHECK(count_incorrect_states(none, base, &none).handler_caused == 0);
}

TEST_CASE("energy model") {
  const auto catalog = default_home_catalog();
  const CostModel cost;
  CHECK(compute_energy({}, catalog, cost) == 0.0);

  EnergyInputs one;
  one.events[kMotion] = 1;
  CHECK(compute_energy(one, catalog, cost) == doctest::Approx(0.0066));

  const Registry reg(catalog);
  const auto& heater = reg.spec(kHeater);
  const auto& contact = reg.spec(kContact);
  EnergyInputs mix;
  mix.actuations[kHeater] = 3;
  mix.restart_ms[kContact] = 2500;
  const double expect = 3 * heater.power_mw * cost.actuation_duration_ms / 1000.0 + contact.power_mw * 2500 / 1000.0;
  CHECK(compute_energy(mix, catalog, cost) == doctest::Approx(expect));
}

TEST_CASE("cost model parsing") {
  const auto m = load_cost_model(kData / "cost_model.json");
  CHECK(m == CostModel{});
  CHECK(parse_cost_model(cost_model_to_json(m)) == m);
  CHECK(parse_cost_model(R"({"device_command_ms": 9})").device_command_ms == 9);
  CHECK_THROWS_AS(parse_cost_model(R"({"bogus": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_cost_model(R"({"cpu_op_ms": -1})"), ValidationError);
  CHECK_THROWS_AS(parse_cost_model(R"({"restart_attempts": 0})"), ValidationError);
  CHECK_THROWS_AS(parse_cost_model("[1"), ValidationError);
}

TEST_CASE("latency tables") {
  const auto t = compute_latencies({}, default_home_catalog(), builtin_schemes());
  REQUIRE(t.functions.size() == 7);
  CHECK(t.function("checkpoint")->stddev_ms == 0.0);
  for (const auto& f : t.functions) {
    if (f.function != "retry") CHECK(t.function("retry")->mean_ms > f.mean_ms);
  }
  CHECK(t.handle_times.size() == builtin_schemes().size() * std::size(kAllFaultKinds));

  CostModel slow;
  slow.device_command_ms = 60;
  const auto s = compute_latencies(slow, default_home_catalog(), builtin_schemes());
  CHECK(s.function("notify")->mean_ms > t.function("notify")->mean_ms);

  const auto csv = latency_csv(t);
  CHECK(csv.rfind("table,key,fault_kind", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 7 + 28 + 4);
}

TEST_CASE("report csv and summary") {
  std::vector<RunMetrics> runs(6);
  runs[0].mode = RunKind::NoHandler;
  runs[0].incorrect_states = 200;
  runs[0].energy_mj = 100;
  runs[1].mode = RunKind::SuppressionOnly;
  runs[1].incorrect_states = 150;
  const char* names[] = {"Conservative", "TransientResistant", "LongRestart", "TimeSensitive"};
  for (int i = 0; i < 4; ++i) {
    runs[2 + i].mode = RunKind::FullHandler;
    runs[2 + i].scheme = names[i];
    runs[2 + i].incorrect_states = 50 + static_cast<std::uint64_t>(i);
    runs[2 + i].energy_mj = 40.25;
  }
  const auto csv = report_csv(runs);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(parse_report_csv(csv).size() == 6);
  CHECK(report_csv(parse_report_csv(csv)) == csv);
  CHECK_THROWS_AS(parse_report_csv("b,x,1\n"), ParseError);

  CHECK(reduction(200, 50) == doctest::Approx(0.75));
  CHECK(reduction(0, 5) == 0.0);
  const auto summary = report_summary(runs);
  CHECK(summary.find("reduction vs NoHandler: 75.00% incorrect, 59.75% energy") != std::string::npos);
  CHECK(summary.find("reduction vs SuppressionOnly: 66.67% incorrect") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "hearth_report_test";
  emit_report(dir, runs);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("run modes conserve events and repeat exactly") {
  const Registry reg(default_home_catalog());
  const auto faults = parse_fault_schedule(kData / "single.csv", reg);
  const auto tr = head(trace(), 20000);
  for (const RunMode mode : {RunMode{RunKind::Baseline, ""}, RunMode{RunKind::NoHandler, ""},
                             RunMode{RunKind::SuppressionOnly, ""}, RunMode{RunKind::FullHandler, "LongRestart"}}) {
    CAPTURE(to_string(mode.kind));
    const auto a = run_simulation(tr, mode, faults);
    const auto b = run_simulation(tr, mode, faults);
    CHECK(a.metrics.events == a.metrics.events_dispatched + a.metrics.events_suppressed);
    CHECK(report_csv({a.metrics}) == report_csv({b.metrics}));
    CHECK(a.history.values == b.history.values);
    CHECK(a.history.ticks == 20000);
    if (mode.kind == RunKind::Baseline) {
      CHECK(a.metrics.events_suppressed == 0);
      CHECK(a.metrics.restarts == 0);
    }
  }
}

TEST_CASE("a suppressed sensor dispatches nothing") {
  const auto tr = head(trace(), 20000);
  const std::vector<FaultSpec> faults{{0, kContact, FaultKind::HighVariance, Fixability::Unfixable, 0, std::nullopt}};
  const auto r = run_simulation(tr, {RunKind::SuppressionOnly, ""}, faults);
  REQUIRE(r.counters.count(kContact));
  CHECK(r.counters.at(kContact).events_dispatched == 0);
  CHECK(r.counters.at(kContact).events_suppressed > 0);
  const auto none = run_simulation(tr, {RunKind::NoHandler, ""}, faults);
  REQUIRE(none.counters.count(kContact));
  CHECK(none.counters.at(kContact).events_suppressed == 0);
  CHECK(none.counters.at(kContact).events_dispatched > 0);
}

TEST_CASE("mode letters") {
  for (auto k : {RunKind::Baseline, RunKind::NoHandler, RunKind::SuppressionOnly, RunKind::FullHandler})
    CHECK(run_kind_from_letter(std::string(1, mode_letter(k))) == k);
  CHECK_FALSE(run_kind_from_letter("e"));
  CHECK(mode_letter(RunKind::FullHandler) == 'd');
}
