#include "hearth/sim.hpp"

#include <algorithm>
#include <cmath>

#include "hearth/checkpoint.hpp"
#include "hearth/registry.hpp"

namespace hearth {

std::string_view to_string(RunKind k) {
  switch (k) {
    case RunKind::Baseline: return "Baseline";
    case RunKind::NoHandler: return "NoHandler";
    case RunKind::SuppressionOnly: return "SuppressionOnly";
    case RunKind::FullHandler: return "FullHandler";
  }
  return "?";
}

char mode_letter(RunKind k) { return static_cast<char>('a' + static_cast<int>(k)); }

std::optional<RunKind> run_kind_from_letter(std::string_view s) {
  if (s.size() != 1 || s[0] < 'a' || s[0] > 'd') return std::nullopt;
  return static_cast<RunKind>(s[0] - 'a');
}

std::vector<Value> History::stream(DeviceId id) const {
  auto it = std::find(devices.begin(), devices.end(), id);
  if (it == devices.end()) throw UnknownDevice(id);
  const auto d = static_cast<std::size_t>(it - devices.begin());
  std::vector<Value> out(static_cast<std::size_t>(ticks));
  for (Tick t = 0; t < ticks; ++t) out[static_cast<std::size_t>(t)] = value(t, d);
  return out;
}

namespace {

class Simulation {
 public:
  Simulation(const EnvironmentTrace& trace, const RunMode& mode, const std::vector<FaultSpec>& faults,
             const SimulationSetup& setup)
      : trace_(trace),
        mode_(mode),
        registry_(setup.catalog),
        apps_(setup.apps),
        oracle_(setup.identification_delay) {
    registry_.set_transform_params(setup.transform);
    config_ = setup.config ? *setup.config : default_home_config(registry_, apps_);
    if (mode.kind == RunKind::FullHandler && !mode.scheme.empty()) {
      if (!config_.find_scheme(mode.scheme)) throw ValidationError("scheme", "unknown scheme '" + mode.scheme + "'");
      for (auto& [id, d] : config_.devices) d.scheme = mode.scheme;
    }
    apply_app_config(config_, apps_);
    validate(config_, &registry_);
    for (const auto& a : apps_) validate(a, &registry_);
    if (mode.kind != RunKind::Baseline) schedule_ = faults;
    for (auto id : registry_.sensor_ids()) {
      auto it = trace.streams.find(id);
      if (it == trace.streams.end() || static_cast<Tick>(it->second.size()) < trace.ticks)
        throw ValidationError("trace", "no stream for sensor " + std::to_string(to_int(id)));
      sensor_streams_.emplace_back(id, &it->second);
    }
    ctx_.emplace(HandlerContext{registry_, config_, oracle_, apps_, app_supp_, log_, sink_, {}, 0});
    if (mode.kind == RunKind::SuppressionOnly) handler_.emplace(*ctx_, HandlerMode::SuppressionOnly);
    if (mode.kind == RunKind::FullHandler) handler_.emplace(*ctx_, HandlerMode::Full);
    rules_ = MatchRules::from_registry(registry_, config_.general.sensor_match_tolerance);
    for (auto id : registry_.ids()) {
      if (registry_.spec(id).virtual_sink) sinks_.insert(id);
    }
  }

  RunResult run() {
    RunResult r;
    r.history.devices = registry_.ids();
    r.history.ticks = trace_.ticks;
    const auto cells = static_cast<std::size_t>(trace_.ticks) * r.history.devices.size();
    r.history.values.resize(cells);
    r.history.responsive.resize(cells);
    for (Tick t = 0; t < trace_.ticks; ++t) tick(t, r);

    r.metrics.mode = mode_.kind;
    r.metrics.scheme = mode_.kind == RunKind::FullHandler ? mode_.scheme : "";
    for (auto& [id, c] : counters_) {
      r.metrics.events_dispatched += c.events_dispatched;
      r.metrics.events_suppressed += c.events_suppressed;
      r.metrics.actuations += c.actuations;
    }
    r.metrics.events = r.metrics.events_dispatched + r.metrics.events_suppressed;
    if (ctx_) {
      const auto& hc = ctx_->counters;
      r.metrics.restarts = hc.soft_restarts + hc.hard_restarts;
      r.metrics.rollbacks = hc.rollbacks;
      r.metrics.rollback_successes = hc.rollback_successes;
      r.metrics.rollback_actuations = hc.rollback_actuations;
      for (const auto& [id, n] : hc.restarts_by_device) counters_[id].restarts = n;
      for (const auto& [id, ms] : hc.restart_ms_by_device) counters_[id].restart_ms = static_cast<double>(ms);
    }
    if (handler_) {
      for (const auto& s : handler_->finished()) {
        ++r.metrics.sessions;
        ++(s.outcome == SessionOutcome::Repaired ? r.metrics.repaired : r.metrics.unrepaired);
      }
      r.metrics.sessions += handler_->sessions().size();
      r.sessions = handler_->finished();
    }
    r.notifications = sink_.records();
    r.counters = counters_;
    return r;
  }

  EnergyInputs energy_inputs() const {
    EnergyInputs in;
    for (const auto& [id, c] : counters_) {
      in.events[id] = c.events_dispatched;
      in.actuations[id] = c.actuations;
      in.restart_ms[id] = c.restart_ms;
    }
    return in;
  }

 private:
  void tick(Tick t, RunResult& r) {
    registry_.faults() = apply_faults(schedule_, t, std::move(registry_.faults()));
    for (const auto& [id, s] : sensor_streams_) registry_.set_ground_truth(id, (*s)[static_cast<std::size_t>(t)]);
    if (handler_) handler_->step(t);

    acted_.clear();
    execute(clock_commands(t, apps_, view_, registry_, &app_supp_), t);
    poll(t);
    std::vector<Command> cmds;
    for (const auto& e : events_) {
      auto c = dispatch(e, apps_, view_, registry_, &app_supp_);
      cmds.insert(cmds.end(), c.begin(), c.end());
    }
    execute(std::move(cmds), t);
    if (handler_) checkpoint_hook(t);
    record(t, r.history);
  }

  void poll(Tick t) {
    events_.clear();
    for (auto id : registry_.ids()) {
      if (sinks_.count(id)) continue;
      if (registry_.is_suppressed(id)) {
        // Not delivered, but still a change the device went through.
        const auto raw = registry_.observe(id, t);
        if (!raw.responsive()) continue;
        auto prev = raw_.find(id);
        if (prev != raw_.end() && prev->second != raw.value) ++counters_[id].events_suppressed;
        raw_[id] = raw.value;
        continue;
      }
      const auto st = registry_.read_device(id, t);
      if (!st.responsive()) continue;
      raw_[id] = st.value;
      if (registry_.override_of(id)) {
        view_[id] = st.value;
        continue;
      }
      auto v = view_.find(id);
      if (v != view_.end() && v->second == st.value) continue;
      const Value old = v == view_.end() ? std::nan("") : v->second;
      view_[id] = st.value;
      events_.push_back(Event{id, old, st.value, t});
      ++counters_[id].events_dispatched;
    }
    // Overrides stay visible to apps even while their device is not polled.
    for (auto id : registry_.ids()) {
      if (auto ov = registry_.override_of(id)) view_[id] = *ov;
    }
  }

  // Last writer in app order wins per device; each device is actuated once.
  void execute(std::vector<Command> cmds, Tick t) {
    if (cmds.empty()) return;
    std::stable_sort(cmds.begin(), cmds.end(), [](const Command& a, const Command& b) { return a.app < b.app; });
    std::vector<std::pair<DeviceId, Value>> final_cmds;
    for (const auto& c : cmds) {
      auto it = std::find_if(final_cmds.begin(), final_cmds.end(), [&](const auto& p) { return p.first == c.device; });
      if (it == final_cmds.end()) {
        final_cmds.emplace_back(c.device, c.value);
      } else {
        it->second = c.value;
      }
    }
    for (const auto& [d, v] : final_cmds) {
      const auto res = registry_.actuate(d, v, t);
      if (res != ActuationResult::Ok && res != ActuationResult::NoEffect) continue;
      ++counters_[d].actuations;
      acted_.emplace_back(d, v);
      if (sinks_.count(d)) view_[d] = v;
    }
  }

  void checkpoint_hook(Tick t) {
    const auto known = handler_->known_faulty();
    if (!acted_.empty() && known.empty()) {
      bool cascades = false;
      for (const auto& [d, v] : acted_) cascades = cascades || does_actuation_cascade(d, v, apps_, view_);
      if (!cascades) log_.take(registry_.snapshot(t), t);
    }
    log_.validate_pending(t, config_.general.identification_upper_bound, oracle_, rules_);
    if (t % 1000 == 0) log_.evict_stale(t, config_.general.checkpoint_ttl);
  }

  void record(Tick t, History& h) {
    for (std::size_t i = 0; i < h.devices.size(); ++i) {
      const auto id = h.devices[i];
      const auto idx = h.index(t, i);
      if (sinks_.count(id)) {
        h.values[idx] = registry_.commanded(id);
        h.responsive[idx] = 1;
        continue;
      }
      const auto st = registry_.observe(id, t);
      h.values[idx] = st.value;
      h.responsive[idx] = st.health == Health::Unresponsive ? 0 : 1;
    }
  }

  const EnvironmentTrace& trace_;
  RunMode mode_;
  Registry registry_;
  std::vector<AppSpec> apps_;
  ConfigFile config_;
  PerfectOracle oracle_;
  AppSuppressions app_supp_;
  CheckpointLog log_;
  NotificationSink sink_;
  std::optional<HandlerContext> ctx_;
  std::optional<AutoHandler> handler_;
  MatchRules rules_;
  std::vector<FaultSpec> schedule_;
  std::vector<std::pair<DeviceId, const std::vector<Value>*>> sensor_streams_;
  std::set<DeviceId> sinks_;
  StateView view_;
  std::map<DeviceId, Value> raw_;
  std::vector<Event> events_;
  std::vector<std::pair<DeviceId, Value>> acted_;
  std::map<DeviceId, DeviceCounters> counters_;
};

}  // namespace

RunResult run_simulation(const EnvironmentTrace& trace, const RunMode& mode, const std::vector<FaultSpec>& faults,
                         const SimulationSetup& setup, const CostModel& cost) {
  Simulation sim(trace, mode, faults, setup);
  auto r = sim.run();
  r.metrics.energy_mj = compute_energy(sim.energy_inputs(), setup.catalog, cost);
  return r;
}

IncorrectCount count_incorrect_states(const History& run, const History& baseline, const History* no_handler) {
  auto same_shape = [](const History& a, const History& b) { return a.ticks == b.ticks && a.devices == b.devices; };
  if (!same_shape(run, baseline) || (no_handler && !same_shape(run, *no_handler)))
    throw ShapeMismatch("histories differ in ticks or devices");
  auto wrong = [&](const History& h, std::size_t i) {
    if (!h.responsive[i]) return baseline.responsive[i] != 0;
    return !baseline.responsive[i] || h.values[i] != baseline.values[i];
  };
  IncorrectCount out;
  const std::size_t nd = run.devices.size();
  for (Tick t = 0; t < run.ticks; ++t) {
    for (std::size_t d = 0; d < nd; ++d) {
      const auto i = run.index(t, d);
      if (!wrong(run, i)) continue;
      ++out.total;
      ++out.by_device[run.devices[d]];
      if (no_handler && !wrong(*no_handler, i)) ++out.handler_caused;
    }
  }
  return out;
}

double compute_energy(const EnergyInputs& in, const std::vector<DeviceSpec>& catalog, const CostModel& cost) {
  std::map<DeviceId, const DeviceSpec*> specs;
  for (const auto& s : catalog) specs[s.id] = &s;
  auto spec = [&](DeviceId id) -> const DeviceSpec& {
    auto it = specs.find(id);
    if (it == specs.end()) throw UnknownDevice(id);
    return *it->second;
  };
  double uj = 0.0;  // mW x ms = microjoules
  for (const auto& [id, n] : in.events) uj += static_cast<double>(n) * spec(id).power_mw * spec(id).read_latency_ms;
  for (const auto& [id, n] : in.actuations)
    uj += static_cast<double>(n) * spec(id).power_mw * cost.actuation_duration_ms;
  for (const auto& [id, ms] : in.restart_ms) uj += spec(id).power_mw * ms;
  return uj / 1000.0;
}

const RunMetrics* SuiteResult::find(RunKind k, const std::string& scheme) const {
  for (const auto& r : runs) {
    if (r.mode == k && (k != RunKind::FullHandler || r.scheme == scheme)) return &r;
  }
  return nullptr;
}

SuiteResult run_suite(const EnvironmentTrace& trace, const std::vector<FaultSpec>& faults,
                      const std::vector<std::string>& schemes, const SimulationSetup& setup, const CostModel& cost) {
  SuiteResult out;
  const auto base = run_simulation(trace, {RunKind::Baseline, ""}, faults, setup, cost);
  const auto none = run_simulation(trace, {RunKind::NoHandler, ""}, faults, setup, cost);
  auto fill = [&](RunMetrics m, const History& h, const History* attribution) {
    const auto c = count_incorrect_states(h, base.history, attribution);
    m.incorrect_states = c.total;
    m.handler_caused_incorrect = c.handler_caused;
    m.incorrect_by_device = c.by_device;
    out.runs.push_back(std::move(m));
  };
  fill(base.metrics, base.history, nullptr);
  fill(none.metrics, none.history, nullptr);
  {
    const auto supp = run_simulation(trace, {RunKind::SuppressionOnly, ""}, faults, setup, cost);
    fill(supp.metrics, supp.history, &none.history);
  }
  for (const auto& s : schemes) {
    const auto full = run_simulation(trace, {RunKind::FullHandler, s}, faults, setup, cost);
    fill(full.metrics, full.history, &none.history);
  }
  return out;
}

}  // namespace hearth
