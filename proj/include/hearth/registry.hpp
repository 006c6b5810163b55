#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hearth/device.hpp"
#include "hearth/fault.hpp"
#include "hearth/types.hpp"

namespace hearth {

enum class Health { Ok, Faulty, Unresponsive, Suppressed };

struct DeviceState {
  DeviceId device{};
  Value value = 0.0;
  Tick tick = 0;
  Health health = Health::Ok;
  std::optional<FaultKind> fault;

  bool responsive() const { return health == Health::Ok || health == Health::Faulty; }
};

struct SystemSnapshot {
  std::map<DeviceId, Value> sensor_states;
  std::map<DeviceId, Value> actuator_states;
  Tick tick = 0;

  std::optional<Value> value_of(DeviceId id) const;
  bool operator==(const SystemSnapshot&) const = default;
};

enum class ActuationResult { Ok, NoEffect, SuppressedDevice, Unresponsive };

class NotActuator : public Error {
 public:
  explicit NotActuator(DeviceId id) : Error("device " + std::to_string(to_int(id)) + " is not an actuator") {}
};

// Every poll and actuation goes through the registry. Sensor ground truth is
// fed in from the trace each tick; actuator ground truth is the last accepted
// command, which a stuck-at fault masks until it clears.
class Registry {
 public:
  Registry() = default;
  explicit Registry(const std::vector<DeviceSpec>& specs);

  void add(DeviceSpec spec);
  void remove(DeviceId id);
  bool contains(DeviceId id) const { return devices_.count(id) != 0; }
  const DeviceSpec& spec(DeviceId id) const;
  std::size_t size() const { return devices_.size(); }

  // Ascending id order. Notification sinks are included in `ids()` only.
  std::vector<DeviceId> ids() const;
  std::vector<DeviceId> sensor_ids() const;
  std::vector<DeviceId> actuator_ids() const;

  void set_ground_truth(DeviceId id, Value v);
  Value ground_truth(DeviceId id) const;
  Value commanded(DeviceId id) const { return ground_truth(id); }

  FaultTable& faults() { return faults_; }
  const FaultTable& faults() const { return faults_; }
  const ActiveFault* fault_on(DeviceId id) const;
  // Removes the active fault on `id` (repair). Returns false if none.
  bool clear_fault(DeviceId id);

  void suppress(DeviceId id);
  void unsuppress(DeviceId id);
  bool is_suppressed(DeviceId id) const { return suppressed_.count(id) != 0; }
  const std::set<DeviceId>& suppressed() const { return suppressed_; }

  // Installs `from -> to`. Throws ValidationError if it would create a chain.
  void redirect(DeviceId from, DeviceId to);
  void clear_redirect(DeviceId from);
  std::optional<DeviceId> redirect_of(DeviceId from) const;
  const std::map<DeviceId, DeviceId>& redirects() const { return redirects_; }

  // Data rollback: pins the value the hub sees for a faulty sensor.
  void set_override(DeviceId id, Value v);
  void clear_override(DeviceId id);
  std::optional<Value> override_of(DeviceId id) const;

  // Effective device state regardless of suppression: follows redirects and
  // overrides and applies any active fault transform.
  DeviceState observe(DeviceId id, Tick tick);

  // Poll path: as `observe`, but a suppressed device yields a Suppressed marker.
  DeviceState read_device(DeviceId id, Tick tick);

  ActuationResult actuate(DeviceId id, Value value, Tick tick);

  // Live values split into sensors and physical actuators (sinks excluded).
  SystemSnapshot snapshot(Tick tick);

  void set_transform_params(TransformParams p) { transform_ = p; }

  std::uint64_t accepted_actuations() const { return accepted_actuations_; }
  std::uint64_t rejected_actuations() const { return rejected_actuations_; }

 private:
  struct Slot {
    DeviceSpec spec;
    Value truth = 0.0;
    Value last_known = 0.0;
    Tick last_tick = 0;
  };

  Slot& slot(DeviceId id);
  const Slot& slot(DeviceId id) const;

  std::map<DeviceId, Slot> devices_;
  FaultTable faults_;
  std::set<DeviceId> suppressed_;
  std::map<DeviceId, DeviceId> redirects_;
  std::map<DeviceId, Value> overrides_;
  TransformParams transform_;
  std::uint64_t accepted_actuations_ = 0;
  std::uint64_t rejected_actuations_ = 0;
};

}  // namespace hearth
