#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hearth {

// One poll cycle = one simulated second.
using Tick = std::int64_t;
inline constexpr Tick kTicksPerDay = 86400;

// Device and app values are carried as doubles; binary devices use {0, 1}.
using Value = double;

enum class DeviceId : std::int32_t {};
enum class AppId : std::int32_t {};

constexpr std::int32_t to_int(DeviceId id) { return static_cast<std::int32_t>(id); }
constexpr std::int32_t to_int(AppId id) { return static_cast<std::int32_t>(id); }

enum class DeviceKind { Sensor, Actuator };

// Device classes from the reference deployment: six sensor classes, two
// actuator classes.
enum class TypeClass { S1, S2, S3, S4, S5, S6, A1, A2 };

enum class FaultKind { Power, Communication, CriticalError, Outlier, StuckAt, HighVariance, Spike };
inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::Power,   FaultKind::Communication, FaultKind::CriticalError, FaultKind::Outlier,
    FaultKind::StuckAt, FaultKind::HighVariance,  FaultKind::Spike};

constexpr bool is_fail_stop(FaultKind k) {
  return k == FaultKind::Power || k == FaultKind::Communication || k == FaultKind::CriticalError;
}

enum class Fixability { SoftFixable, HardFixable, Unfixable };

enum class RollbackStrategy { MostRecent, FailSafe, FailNorm, Disabled };

// Base for every error raised by the library. `field` names the offending
// input (config path, device id, line number) when one exists.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UnknownDevice : public Error {
 public:
  explicit UnknownDevice(DeviceId id)
      : Error("unknown device " + std::to_string(to_int(id))), device(id) {}
  DeviceId device;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field_name, const std::string& msg)
      : Error(field_name + ": " + msg), field(std::move(field_name)) {}
  std::string field;
};

class ParseError : public Error {
 public:
  ParseError(int line_no, const std::string& msg)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
  int line;
};

std::string_view to_string(DeviceKind k);
std::string_view to_string(TypeClass t);
std::string_view to_string(FaultKind k);
std::string_view to_string(Fixability f);
std::string_view to_string(RollbackStrategy s);

std::optional<DeviceKind> device_kind_from(std::string_view s);
std::optional<TypeClass> type_class_from(std::string_view s);
std::optional<FaultKind> fault_kind_from(std::string_view s);
std::optional<Fixability> fixability_from(std::string_view s);
std::optional<RollbackStrategy> rollback_strategy_from(std::string_view s);

}  // namespace hearth

template <>
struct std::hash<hearth::DeviceId> {
  std::size_t operator()(hearth::DeviceId id) const noexcept {
    return std::hash<std::int32_t>{}(hearth::to_int(id));
  }
};
