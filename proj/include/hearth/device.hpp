#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hearth/types.hpp"

namespace hearth {

struct ValueDomain {
  enum class Type { Binary, Integer, Real };

  Type type = Type::Binary;
  double min = 0.0;
  double max = 1.0;
  std::string unit;

  static ValueDomain binary() { return {}; }
  static ValueDomain integer(double lo, double hi) { return {Type::Integer, lo, hi, {}}; }
  static ValueDomain real(double lo, double hi, std::string unit) {
    return {Type::Real, lo, hi, std::move(unit)};
  }

  bool is_binary() const { return type == Type::Binary; }
  bool contains(Value v) const;
  // Nearest in-domain value (rounds integers, snaps binaries to 0/1).
  Value clamp(Value v) const;

  bool operator==(const ValueDomain&) const = default;
};

struct DeviceSpec {
  DeviceId id{};
  std::string name;
  DeviceKind kind = DeviceKind::Sensor;
  TypeClass type_class = TypeClass::S1;
  ValueDomain domain;
  double power_mw = 0.0;
  double read_latency_ms = 0.0;
  bool supports_soft_restart = true;
  bool supports_hard_restart = true;
  double soft_restart_ms = 0.0;
  double hard_restart_ms = 0.0;
  int max_restart_attempts = 3;
  std::optional<Value> fail_safe_state;
  // Notification sinks: virtual actuators that never show up in snapshots,
  // checkpoints, or fault schedules.
  bool virtual_sink = false;

  bool is_sensor() const { return kind == DeviceKind::Sensor; }
  bool is_actuator() const { return kind == DeviceKind::Actuator; }

  bool operator==(const DeviceSpec&) const = default;
};

// Throws ValidationError if any invariant of `spec` is broken.
void validate(const DeviceSpec& spec);

// Spec pre-filled with the class defaults (power, read latency, restart
// timings, domain).
DeviceSpec spec_for_class(DeviceId id, std::string name, TypeClass type_class);

// Ids of the default 17-device home.
namespace home {
inline constexpr DeviceId kMotion{1};
inline constexpr DeviceId kContact{2};
inline constexpr DeviceId kTemperature{3};
inline constexpr DeviceId kPresence{4};
inline constexpr DeviceId kSmoke{5};
inline constexpr DeviceId kSmokeReplica{6};
inline constexpr DeviceId kLeak{7};
inline constexpr DeviceId kDoorLock{8};
inline constexpr DeviceId kCoffee{9};
inline constexpr DeviceId kLight{10};
inline constexpr DeviceId kLightReplica{11};
inline constexpr DeviceId kAlarm{12};
inline constexpr DeviceId kAirConditioner{13};
inline constexpr DeviceId kHeater{14};
inline constexpr DeviceId kWindow{15};
inline constexpr DeviceId kWindow2{16};
inline constexpr DeviceId kWaterValve{17};
inline constexpr DeviceId kSmsPatio{18};
inline constexpr DeviceId kSmsIntruder{19};
}  // namespace home

// Seven sensors, ten actuators and two notification sinks.
std::vector<DeviceSpec> default_home_catalog();

// Device catalog file: JSON array of DeviceSpec records.
std::vector<DeviceSpec> load_catalog(const std::filesystem::path& path);
std::vector<DeviceSpec> parse_catalog(const std::string& json_text);
void save_catalog(const std::filesystem::path& path, const std::vector<DeviceSpec>& specs);
std::string catalog_to_json(const std::vector<DeviceSpec>& specs);

}  // namespace hearth
