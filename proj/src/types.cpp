#include "hearth/types.hpp"

#include <array>
#include <utility>

namespace hearth {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

constexpr std::array<std::pair<DeviceKind, std::string_view>, 2> kKinds{{
    {DeviceKind::Sensor, "Sensor"},
    {DeviceKind::Actuator, "Actuator"},
}};

constexpr std::array<std::pair<TypeClass, std::string_view>, 8> kClasses{{
    {TypeClass::S1, "S1"},
    {TypeClass::S2, "S2"},
    {TypeClass::S3, "S3"},
    {TypeClass::S4, "S4"},
    {TypeClass::S5, "S5"},
    {TypeClass::S6, "S6"},
    {TypeClass::A1, "A1"},
    {TypeClass::A2, "A2"},
}};

constexpr std::array<std::pair<FaultKind, std::string_view>, 7> kFaultKinds{{
    {FaultKind::Power, "POWER"},
    {FaultKind::Communication, "COMMUNICATION"},
    {FaultKind::CriticalError, "CRITICAL_ERROR"},
    {FaultKind::Outlier, "OUTLIER"},
    {FaultKind::StuckAt, "STUCK_AT"},
    {FaultKind::HighVariance, "HIGH_VARIANCE"},
    {FaultKind::Spike, "SPIKE"},
}};

constexpr std::array<std::pair<Fixability, std::string_view>, 3> kFixability{{
    {Fixability::SoftFixable, "SOFT_FIXABLE"},
    {Fixability::HardFixable, "HARD_FIXABLE"},
    {Fixability::Unfixable, "UNFIXABLE"},
}};

constexpr std::array<std::pair<RollbackStrategy, std::string_view>, 4> kStrategies{{
    {RollbackStrategy::MostRecent, "MostRecent"},
    {RollbackStrategy::FailSafe, "FailSafe"},
    {RollbackStrategy::FailNorm, "FailNorm"},
    {RollbackStrategy::Disabled, "Disabled"},
}};

}  // namespace

std::string_view to_string(DeviceKind k) { return name_of(kKinds, k); }
std::string_view to_string(TypeClass t) { return name_of(kClasses, t); }
std::string_view to_string(FaultKind k) { return name_of(kFaultKinds, k); }
std::string_view to_string(Fixability f) { return name_of(kFixability, f); }
std::string_view to_string(RollbackStrategy s) { return name_of(kStrategies, s); }

std::optional<DeviceKind> device_kind_from(std::string_view s) { return lookup(kKinds, s); }
std::optional<TypeClass> type_class_from(std::string_view s) { return lookup(kClasses, s); }
std::optional<FaultKind> fault_kind_from(std::string_view s) { return lookup(kFaultKinds, s); }
std::optional<Fixability> fixability_from(std::string_view s) { return lookup(kFixability, s); }
std::optional<RollbackStrategy> rollback_strategy_from(std::string_view s) {
  return lookup(kStrategies, s);
}

}  // namespace hearth
