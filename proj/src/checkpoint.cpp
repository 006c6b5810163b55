#include "hearth/checkpoint.hpp"

#include <cmath>
#include <limits>

#include "hearth/fault.hpp"
#include "json.hpp"

namespace hearth {

using nlohmann::json;

bool MatchRules::same(DeviceId id, Value a, Value b) const {
  const double tol = of(id);
  return tol == 0.0 ? a == b : std::fabs(a - b) <= tol;
}

MatchRules MatchRules::from_registry(const Registry& registry, double numeric_tolerance) {
  MatchRules rules;
  for (auto id : registry.sensor_ids()) {
    if (registry.spec(id).domain.type != ValueDomain::Type::Binary) rules.tolerance[id] = numeric_tolerance;
  }
  return rules;
}

void CheckpointLog::take(const SystemSnapshot& snapshot, Tick tick) { pending_.push_back({snapshot, tick}); }

void CheckpointLog::validate_pending(Tick now, Tick bound, const FaultIdentifier& identifier,
                                     const MatchRules& rules) {
  std::vector<Pending> keep;
  for (auto& p : pending_) {
    if (now - p.taken < bound) {
      keep.push_back(std::move(p));
      continue;
    }
    if (identifier.fault_free(p.taken, p.taken + bound)) commit(p.snapshot, p.taken, rules);
  }
  pending_ = std::move(keep);
}

namespace {

// Sum of absolute sensor differences when every sensor is within tolerance.
std::optional<double> sensor_distance(const std::map<DeviceId, Value>& key, const std::map<DeviceId, Value>& probe,
                                      const MatchRules& rules) {
  if (key.size() != probe.size()) return std::nullopt;
  double total = 0.0;
  auto a = key.begin();
  for (auto b = probe.begin(); b != probe.end(); ++a, ++b) {
    if (a->first != b->first || !rules.same(a->first, a->second, b->second)) return std::nullopt;
    total += std::fabs(a->second - b->second);
  }
  return total;
}

}  // namespace

void CheckpointLog::commit(const SystemSnapshot& snapshot, Tick tick, const MatchRules& rules) {
  std::optional<std::size_t> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto d = sensor_distance(entries_[i].sensor_states, snapshot.sensor_states, rules);
    if (d && *d < best_distance) {
      best = i;
      best_distance = *d;
    }
  }
  if (!best) {
    entries_.push_back({snapshot.sensor_states, snapshot.actuator_states, tick, 1});
    return;
  }
  auto& e = entries_[*best];
  if (e.actuator_states == snapshot.actuator_states) {
    ++e.frequency;
  } else {
    e.actuator_states = snapshot.actuator_states;
    e.frequency = 1;
  }
  e.last_tick = std::max(e.last_tick, tick);
}

std::size_t CheckpointLog::evict_stale(Tick now, Tick ttl) {
  const auto before = entries_.size();
  std::erase_if(entries_, [&](const Checkpoint& c) { return now - c.last_tick > ttl; });
  return before - entries_.size();
}

namespace {

json states_json(const std::map<DeviceId, Value>& m) {
  json j = json::object();
  for (const auto& [id, v] : m) j[std::to_string(to_int(id))] = v;
  return j;
}

std::map<DeviceId, Value> states_from(const json& j) {
  std::map<DeviceId, Value> m;
  for (const auto& [k, v] : j.items()) m[DeviceId{std::stoi(k)}] = v.get<Value>();
  return m;
}

}  // namespace

std::string CheckpointLog::to_json() const {
  json entries = json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"sensor_states", states_json(e.sensor_states)},
                       {"actuator_states", states_json(e.actuator_states)},
                       {"last_tick", e.last_tick},
                       {"frequency", e.frequency}});
  }
  json pending = json::array();
  for (const auto& p : pending_) {
    pending.push_back({{"sensor_states", states_json(p.snapshot.sensor_states)},
                       {"actuator_states", states_json(p.snapshot.actuator_states)},
                       {"taken", p.taken}});
  }
  return json{{"entries", entries}, {"pending", pending}}.dump(2);
}

CheckpointLog CheckpointLog::from_json(const std::string& text) {
  CheckpointLog log;
  try {
    const auto root = json::parse(text);
    for (const auto& e : root.at("entries")) {
      Checkpoint c{states_from(e.at("sensor_states")), states_from(e.at("actuator_states")),
                   e.at("last_tick").get<Tick>(), e.at("frequency").get<std::uint32_t>()};
      if (c.frequency < 1) throw ValidationError("entries.frequency", "must be >= 1");
      log.entries_.push_back(std::move(c));
    }
    if (root.contains("pending")) {
      for (const auto& p : root.at("pending")) {
        const Tick taken = p.at("taken").get<Tick>();
        log.pending_.push_back(
            {SystemSnapshot{states_from(p.at("sensor_states")), states_from(p.at("actuator_states")), taken}, taken});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("checkpoint log: ") + e.what());
  }
  return log;
}

bool sensors_match(const Checkpoint& entry, const std::map<DeviceId, Value>& current,
                   const std::set<DeviceId>& faulty, const MatchRules& rules) {
  for (const auto& [id, v] : current) {
    if (faulty.count(id)) continue;
    auto it = entry.sensor_states.find(id);
    if (it == entry.sensor_states.end() || !rules.same(id, it->second, v)) return false;
  }
  return true;
}

namespace {

// Highest frequency, then most recent, then lowest index.
bool more_popular(const Checkpoint& a, const Checkpoint& b) {
  if (a.frequency != b.frequency) return a.frequency > b.frequency;
  return a.last_tick > b.last_tick;
}

bool more_recent(const Checkpoint& a, const Checkpoint& b) {
  if (a.last_tick != b.last_tick) return a.last_tick > b.last_tick;
  return a.frequency > b.frequency;
}

template <typename Better>
std::optional<std::size_t> best_of(const std::vector<Checkpoint>& entries, const std::vector<std::size_t>& idx,
                                   Better better) {
  std::optional<std::size_t> best;
  for (auto i : idx) {
    if (!best || better(entries[i], entries[*best])) best = i;
  }
  return best;
}

bool at_fail_safe(const Checkpoint& c, const std::map<DeviceId, Value>& fail_safe) {
  for (const auto& [id, v] : c.actuator_states) {
    auto it = fail_safe.find(id);
    if (it != fail_safe.end() && it->second != v) return false;
  }
  return true;
}

}  // namespace

std::optional<std::size_t> select_checkpoint(const std::vector<Checkpoint>& entries, RollbackStrategy strategy,
                                             const std::map<DeviceId, Value>& current_sensors,
                                             const std::set<DeviceId>& faulty,
                                             const std::map<DeviceId, Value>& fail_safe, const MatchRules& rules) {
  std::vector<std::size_t> all(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) all[i] = i;
  auto matching = [&](const std::vector<std::size_t>& from) {
    std::vector<std::size_t> out;
    for (auto i : from) {
      if (sensors_match(entries[i], current_sensors, faulty, rules)) out.push_back(i);
    }
    return out;
  };

  switch (strategy) {
    case RollbackStrategy::Disabled:
      return std::nullopt;
    case RollbackStrategy::MostRecent:
      return best_of(entries, all, more_recent);
    case RollbackStrategy::FailNorm:
      return best_of(entries, matching(all), more_popular);
    case RollbackStrategy::FailSafe: {
      std::vector<std::size_t> safe;
      for (auto i : all) {
        if (at_fail_safe(entries[i], fail_safe)) safe.push_back(i);
      }
      if (safe.empty()) return best_of(entries, matching(all), more_popular);
      const auto m = matching(safe);
      return best_of(entries, m.empty() ? safe : m, more_popular);
    }
  }
  return std::nullopt;
}

RollbackResult rollback(const CheckpointLog& log, Registry& registry, const RollbackSettings& settings,
                        const std::set<DeviceId>& faulty, Tick tick) {
  RollbackResult result;
  if (settings.strategy == RollbackStrategy::Disabled) {
    result.failure = RollbackFailure::Disabled;
    return result;
  }
  std::map<DeviceId, Value> current;
  for (auto id : registry.sensor_ids()) {
    if (!faulty.count(id)) current[id] = registry.observe(id, tick).value;
  }
  result.selected =
      select_checkpoint(log.entries(), settings.strategy, current, faulty, settings.fail_safe, settings.rules);
  if (!result.selected) {
    result.failure = RollbackFailure::NoCheckpoint;
    return result;
  }
  const auto& best = log.entries()[*result.selected];

  std::vector<std::pair<DeviceId, Value>> moves;
  for (const auto& [id, v] : best.actuator_states) {
    if (!registry.contains(id)) continue;
    const auto st = registry.observe(id, tick);
    if (st.responsive() && st.value == v) continue;
    if (faulty.count(id) || !st.responsive() || registry.is_suppressed(id)) {
      result.failure = RollbackFailure::FaultyActuator;
      return result;
    }
    moves.emplace_back(id, v);
  }
  for (const auto& [id, v] : moves) {
    registry.actuate(id, v, tick);
    result.actuated.push_back(id);
  }
  for (auto id : faulty) {
    if (!registry.contains(id) || registry.spec(id).kind != DeviceKind::Sensor || !registry.fault_on(id)) continue;
    auto it = best.sensor_states.find(id);
    if (it == best.sensor_states.end()) continue;
    registry.set_override(id, it->second);
    result.overridden.push_back(id);
  }
  result.success = true;
  return result;
}

}  // namespace hearth
