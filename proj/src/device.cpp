#include "hearth/device.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hearth {

using nlohmann::json;

bool ValueDomain::contains(Value v) const {
  if (std::isnan(v)) return false;
  switch (type) {
    case Type::Binary:
      return v == 0.0 || v == 1.0;
    case Type::Integer:
      return v >= min && v <= max && std::floor(v) == v;
    case Type::Real:
      return v >= min && v <= max;
  }
  return false;
}

Value ValueDomain::clamp(Value v) const {
  switch (type) {
    case Type::Binary:
      return v >= 0.5 ? 1.0 : 0.0;
    case Type::Integer:
      return std::min(max, std::max(min, std::round(v)));
    case Type::Real:
      return std::min(max, std::max(min, v));
  }
  return v;
}

void validate(const DeviceSpec& spec) {
  const std::string where = "device " + std::to_string(to_int(spec.id));
  if (spec.power_mw < 0) throw ValidationError(where + ".power_mw", "must be >= 0");
  if (spec.read_latency_ms < 0) throw ValidationError(where + ".read_latency_ms", "must be >= 0");
  if (spec.max_restart_attempts < 1)
    throw ValidationError(where + ".max_restart_attempts", "must be >= 1");
  if (spec.soft_restart_ms < 0 || spec.hard_restart_ms < 0)
    throw ValidationError(where + ".restart_ms", "must be >= 0");
  if (spec.domain.min > spec.domain.max) throw ValidationError(where + ".domain", "min > max");
  if (spec.fail_safe_state) {
    if (!spec.is_actuator())
      throw ValidationError(where + ".fail_safe_state", "only actuators carry a fail-safe state");
    if (!spec.domain.contains(*spec.fail_safe_state))
      throw ValidationError(where + ".fail_safe_state", "outside value domain");
  }
  const bool sensor_class = spec.type_class <= TypeClass::S6;
  if (sensor_class != spec.is_sensor())
    throw ValidationError(where + ".type_class", "class does not match device kind");
  if (spec.virtual_sink && !spec.is_actuator())
    throw ValidationError(where + ".virtual", "notification sinks are actuators");
}

DeviceSpec spec_for_class(DeviceId id, std::string name, TypeClass type_class) {
  DeviceSpec s;
  s.id = id;
  s.name = std::move(name);
  s.type_class = type_class;
  s.kind = type_class <= TypeClass::S6 ? DeviceKind::Sensor : DeviceKind::Actuator;
  s.domain = ValueDomain::binary();
  s.max_restart_attempts = 3;
  // power (mW), read (ms), soft/hard restart (ms)
  switch (type_class) {
    case TypeClass::S1:
      s.power_mw = 66;
      s.read_latency_ms = 0.1;
      s.soft_restart_ms = 1500;
      s.hard_restart_ms = 6000;
      break;
    case TypeClass::S2:
      s.power_mw = 0.1;
      s.read_latency_ms = 0.1;
      s.soft_restart_ms = 1000;
      s.hard_restart_ms = 5000;
      break;
    case TypeClass::S3:
      s.power_mw = 19.5;
      s.read_latency_ms = 37.5;
      s.soft_restart_ms = 2500;
      s.hard_restart_ms = 8000;
      s.domain = ValueDomain::real(0, 120, "F");
      break;
    case TypeClass::S4:
      s.power_mw = 1.3;
      s.read_latency_ms = 0.5;
      s.soft_restart_ms = 2000;
      s.hard_restart_ms = 7000;
      break;
    case TypeClass::S5:
      s.power_mw = 30;
      s.read_latency_ms = 0.96;
      s.soft_restart_ms = 3000;
      s.hard_restart_ms = 9000;
      break;
    case TypeClass::S6:
      s.power_mw = 80;
      s.read_latency_ms = 0.1;
      s.soft_restart_ms = 1500;
      s.hard_restart_ms = 6000;
      break;
    case TypeClass::A1:
      s.power_mw = 0.01;
      s.read_latency_ms = 0.1;
      s.soft_restart_ms = 2000;
      s.hard_restart_ms = 6000;
      break;
    case TypeClass::A2:
      s.power_mw = 100;
      s.read_latency_ms = 0.1;
      s.soft_restart_ms = 3000;
      s.hard_restart_ms = 10000;
      break;
  }
  return s;
}

std::vector<DeviceSpec> default_home_catalog() {
  using namespace home;
  std::vector<DeviceSpec> out;
  out.push_back(spec_for_class(kMotion, "motion", TypeClass::S1));
  out.push_back(spec_for_class(kContact, "contact", TypeClass::S2));
  out.push_back(spec_for_class(kTemperature, "temperature", TypeClass::S3));
  out.push_back(spec_for_class(kPresence, "presence", TypeClass::S4));
  out.push_back(spec_for_class(kSmoke, "smoke", TypeClass::S5));
  out.push_back(spec_for_class(kSmokeReplica, "smoke_replica", TypeClass::S5));
  out.push_back(spec_for_class(kLeak, "leak", TypeClass::S6));

  auto actuator = [&](DeviceId id, const char* name, TypeClass cls, std::optional<Value> fail_safe) {
    auto s = spec_for_class(id, name, cls);
    s.fail_safe_state = fail_safe;
    out.push_back(std::move(s));
  };
  actuator(kDoorLock, "door_lock", TypeClass::A1, 1.0);
  actuator(kCoffee, "coffee_machine", TypeClass::A1, 0.0);
  actuator(kLight, "light", TypeClass::A1, std::nullopt);
  actuator(kLightReplica, "light_replica", TypeClass::A1, std::nullopt);
  actuator(kAlarm, "alarm", TypeClass::A2, std::nullopt);
  actuator(kAirConditioner, "air_conditioner", TypeClass::A2, 0.0);
  actuator(kHeater, "heater", TypeClass::A2, 0.0);
  actuator(kWindow, "window", TypeClass::A2, 0.0);
  actuator(kWindow2, "window_2", TypeClass::A2, 0.0);
  actuator(kWaterValve, "water_valve", TypeClass::A2, std::nullopt);

  for (auto [id, name] : {std::pair{kSmsPatio, "sms_patio"}, std::pair{kSmsIntruder, "sms_intruder"}}) {
    auto s = spec_for_class(id, name, TypeClass::A2);
    s.power_mw = 0;
    s.read_latency_ms = 0;
    s.virtual_sink = true;
    s.supports_soft_restart = false;
    s.supports_hard_restart = false;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

const std::set<std::string> kSpecKeys = {
    "id",          "name",          "kind",           "type_class",
    "domain",      "power_mw",      "read_latency_ms", "supports_soft_restart",
    "supports_hard_restart", "soft_restart_ms", "hard_restart_ms", "max_restart_attempts",
    "fail_safe_state", "virtual"};

ValueDomain parse_domain(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected object");
  for (const auto& [k, v] : j.items()) {
    if (k != "type" && k != "min" && k != "max" && k != "unit")
      throw ValidationError(where + "." + k, "unknown field");
  }
  const auto type = j.value("type", std::string("Binary"));
  if (type == "Binary") return ValueDomain::binary();
  const double lo = j.at("min").get<double>();
  const double hi = j.at("max").get<double>();
  if (type == "Integer") return ValueDomain::integer(lo, hi);
  if (type == "Real") return ValueDomain::real(lo, hi, j.value("unit", std::string()));
  throw ValidationError(where + ".type", "unknown domain type '" + type + "'");
}

json domain_json(const ValueDomain& d) {
  switch (d.type) {
    case ValueDomain::Type::Binary:
      return {{"type", "Binary"}};
    case ValueDomain::Type::Integer:
      return {{"type", "Integer"}, {"min", d.min}, {"max", d.max}};
    case ValueDomain::Type::Real:
      return {{"type", "Real"}, {"min", d.min}, {"max", d.max}, {"unit", d.unit}};
  }
  return {};
}

DeviceSpec parse_spec(const json& j, std::size_t index) {
  const std::string where = "catalog[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ValidationError(where, "expected object");
  for (const auto& [k, v] : j.items()) {
    if (!kSpecKeys.count(k)) throw ValidationError(where + "." + k, "unknown field");
  }
  for (const char* required : {"id", "name", "type_class"}) {
    if (!j.contains(required)) throw ValidationError(where + "." + required, "missing");
  }
  const auto cls = type_class_from(j.at("type_class").get<std::string>());
  if (!cls) throw ValidationError(where + ".type_class", "unknown type class");
  DeviceSpec s = spec_for_class(DeviceId{j.at("id").get<int>()}, j.at("name").get<std::string>(), *cls);
  try {
    if (j.contains("kind")) {
      const auto kind = device_kind_from(j.at("kind").get<std::string>());
      if (!kind) throw ValidationError(where + ".kind", "unknown kind");
      s.kind = *kind;
    }
    if (j.contains("domain")) s.domain = parse_domain(j.at("domain"), where + ".domain");
    s.power_mw = j.value("power_mw", s.power_mw);
    s.read_latency_ms = j.value("read_latency_ms", s.read_latency_ms);
    s.supports_soft_restart = j.value("supports_soft_restart", s.supports_soft_restart);
    s.supports_hard_restart = j.value("supports_hard_restart", s.supports_hard_restart);
    s.soft_restart_ms = j.value("soft_restart_ms", s.soft_restart_ms);
    s.hard_restart_ms = j.value("hard_restart_ms", s.hard_restart_ms);
    s.max_restart_attempts = j.value("max_restart_attempts", s.max_restart_attempts);
    if (j.contains("fail_safe_state") && !j.at("fail_safe_state").is_null())
      s.fail_safe_state = j.at("fail_safe_state").get<double>();
    s.virtual_sink = j.value("virtual", false);
  } catch (const json::exception& e) {
    throw ValidationError(where, e.what());
  }
  validate(s);
  return s;
}

}  // namespace

std::vector<DeviceSpec> parse_catalog(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("catalog", e.what());
  }
  if (!j.is_array()) throw ValidationError("catalog", "expected a JSON array");
  std::vector<DeviceSpec> out;
  std::set<DeviceId> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto spec = parse_spec(j[i], i);
    if (!seen.insert(spec.id).second)
      throw ValidationError("catalog[" + std::to_string(i) + "].id", "duplicate device id");
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<DeviceSpec> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

std::string catalog_to_json(const std::vector<DeviceSpec>& specs) {
  json arr = json::array();
  for (const auto& s : specs) {
    json j = {{"id", to_int(s.id)},
              {"name", s.name},
              {"kind", std::string(to_string(s.kind))},
              {"type_class", std::string(to_string(s.type_class))},
              {"domain", domain_json(s.domain)},
              {"power_mw", s.power_mw},
              {"read_latency_ms", s.read_latency_ms},
              {"supports_soft_restart", s.supports_soft_restart},
              {"supports_hard_restart", s.supports_hard_restart},
              {"soft_restart_ms", s.soft_restart_ms},
              {"hard_restart_ms", s.hard_restart_ms},
              {"max_restart_attempts", s.max_restart_attempts}};
    if (s.fail_safe_state) j["fail_safe_state"] = *s.fail_safe_state;
    if (s.virtual_sink) j["virtual"] = true;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

void save_catalog(const std::filesystem::path& path, const std::vector<DeviceSpec>& specs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write catalog " + path.string());
  out << catalog_to_json(specs) << '\n';
}

}  // namespace hearth
