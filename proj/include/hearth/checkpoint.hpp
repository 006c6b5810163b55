#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hearth/registry.hpp"
#include "hearth/types.hpp"

namespace hearth {

class FaultIdentifier;

struct Checkpoint {
  std::map<DeviceId, Value> sensor_states;
  std::map<DeviceId, Value> actuator_states;
  Tick last_tick = 0;
  std::uint32_t frequency = 1;
  bool operator==(const Checkpoint&) const = default;
};

// Per-sensor absolute tolerance for "same sensor state". Sensors without an
// entry compare exactly.
struct MatchRules {
  std::map<DeviceId, double> tolerance;

  double of(DeviceId id) const {
    auto it = tolerance.find(id);
    return it == tolerance.end() ? 0.0 : it->second;
  }
  bool same(DeviceId id, Value a, Value b) const;

  // `numeric_tolerance` for every non-binary sensor in the registry.
  static MatchRules from_registry(const Registry& registry, double numeric_tolerance);
};

// Checkpoint history plus snapshots still waiting to be certified fault free.
class CheckpointLog {
 public:
  struct Pending {
    SystemSnapshot snapshot;
    Tick taken = 0;
    bool operator==(const Pending&) const = default;
  };

  // Queues a snapshot; it only enters history once certified.
  void take(const SystemSnapshot& snapshot, Tick tick);

  // Commits pending snapshots whose window [taken, taken + bound] has elapsed
  // and was fault free; drops the rest of the elapsed ones.
  void validate_pending(Tick now, Tick bound, const FaultIdentifier& identifier, const MatchRules& rules);

  // An entry whose sensors match gets its frequency bumped when the actuators
  // agree, or its actuators overwritten and frequency reset when they do not.
  // Otherwise a new entry is appended. Entry keys are never rewritten.
  void commit(const SystemSnapshot& snapshot, Tick tick, const MatchRules& rules);

  void discard_pending() { pending_.clear(); }

  // Drops entries not refreshed within `ttl`. Returns how many went.
  std::size_t evict_stale(Tick now, Tick ttl);

  const std::vector<Checkpoint>& entries() const { return entries_; }
  std::vector<Checkpoint>& entries() { return entries_; }
  const std::vector<Pending>& pending() const { return pending_; }

  std::string to_json() const;
  static CheckpointLog from_json(const std::string& text);

  bool operator==(const CheckpointLog&) const = default;

 private:
  std::vector<Checkpoint> entries_;
  std::vector<Pending> pending_;
};

// Whether every sensor in `current` not in `faulty` matches `entry`.
bool sensors_match(const Checkpoint& entry, const std::map<DeviceId, Value>& current,
                   const std::set<DeviceId>& faulty, const MatchRules& rules);

// Picks the rollback target. `fail_safe` maps actuators to their fail-safe
// state (actuators without one are unconstrained). Nullopt for Disabled or
// when nothing qualifies.
std::optional<std::size_t> select_checkpoint(const std::vector<Checkpoint>& entries, RollbackStrategy strategy,
                                             const std::map<DeviceId, Value>& current_sensors,
                                             const std::set<DeviceId>& faulty,
                                             const std::map<DeviceId, Value>& fail_safe, const MatchRules& rules);

enum class RollbackFailure { Disabled, NoCheckpoint, FaultyActuator };

struct RollbackResult {
  bool success = false;
  std::optional<RollbackFailure> failure;
  std::optional<std::size_t> selected;
  std::vector<DeviceId> actuated;
  std::vector<DeviceId> overridden;
};

struct RollbackSettings {
  RollbackStrategy strategy = RollbackStrategy::FailNorm;
  MatchRules rules;
  std::map<DeviceId, Value> fail_safe;
};

// Restores actuators to the selected checkpoint and pins the values of the
// faulty sensors. Refuses without side effects when an actuator that would
// have to move is faulty.
RollbackResult rollback(const CheckpointLog& log, Registry& registry, const RollbackSettings& settings,
                        const std::set<DeviceId>& faulty, Tick tick);

}  // namespace hearth
