#include "hearth/config.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "hearth/device.hpp"
#include "hearth/registry.hpp"
#include "json.hpp"

namespace hearth {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Step, std::string_view>, 6> kSteps{{
    {Step::Replicate, "Replicate"},
    {Step::Retry, "Retry"},
    {Step::SoftRestart, "SoftwareRestart"},
    {Step::HardRestart, "HardwareRestart"},
    {Step::Rollback, "Rollback"},
    {Step::Notify, "Notify"},
}};

constexpr std::array<std::pair<NotifyTrigger, std::string_view>, 3> kTriggers{{
    {NotifyTrigger::OnFault, "on_fault"},
    {NotifyTrigger::OnRepaired, "on_repaired"},
    {NotifyTrigger::OnUnrepaired, "on_unrepaired"},
}};

}  // namespace

std::string_view to_string(Step s) {
  for (const auto& [v, n] : kSteps) {
    if (v == s) return n;
  }
  return "?";
}

std::optional<Step> step_from(std::string_view s) {
  for (const auto& [v, n] : kSteps) {
    if (n == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(NotifyTrigger t) {
  for (const auto& [v, n] : kTriggers) {
    if (v == t) return n;
  }
  return "?";
}

std::optional<NotifyTrigger> notify_trigger_from(std::string_view s) {
  for (const auto& [v, n] : kTriggers) {
    if (n == s) return v;
  }
  return std::nullopt;
}

const std::vector<Scheme>& builtin_schemes() {
  using S = Step;
  static const std::vector<Scheme> schemes{
      {"Conservative", {S::Replicate, S::Retry, S::SoftRestart, S::HardRestart, S::Rollback, S::Notify}},
      {"TransientResistant", {S::Replicate, S::SoftRestart, S::HardRestart, S::Rollback, S::Notify}},
      {"LongRestart", {S::Replicate, S::Retry, S::Rollback, S::SoftRestart, S::HardRestart, S::Notify}},
      {"TimeSensitive", {S::Replicate, S::Rollback, S::Retry, S::SoftRestart, S::HardRestart, S::Notify}},
  };
  return schemes;
}

std::optional<Scheme> ConfigFile::find_scheme(const std::string& name) const {
  for (const auto& s : builtin_schemes()) {
    if (s.name == name) return s;
  }
  for (const auto& s : custom_schemes) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

const DeviceConfig& ConfigFile::device(DeviceId id) const {
  auto it = devices.find(id);
  if (it == devices.end()) throw UnknownDevice(id);
  return it->second;
}

DeviceConfig& ConfigFile::device(DeviceId id) {
  auto it = devices.find(id);
  if (it == devices.end()) throw UnknownDevice(id);
  return it->second;
}

DeviceConfig default_device_config(const DeviceSpec& spec) {
  DeviceConfig c;
  c.restart_attempts = spec.max_restart_attempts;
  c.fail_safe_state = spec.fail_safe_state;
  if (spec.virtual_sink) {
    c.rollback_strategy = RollbackStrategy::Disabled;
    return c;
  }
  switch (spec.type_class) {
    case TypeClass::S1:
    case TypeClass::S4:
      c.scheme = "Conservative";
      c.rollback_strategy = RollbackStrategy::FailNorm;
      break;
    case TypeClass::S2:
    case TypeClass::S6:
      // Too weakly correlated with the rest of the home to roll back on.
      c.scheme = "Conservative";
      c.rollback_strategy = RollbackStrategy::Disabled;
      break;
    case TypeClass::S3:
      c.scheme = "TransientResistant";
      c.rollback_strategy = RollbackStrategy::FailNorm;
      break;
    case TypeClass::S5:
      c.scheme = "TimeSensitive";
      c.rollback_strategy = RollbackStrategy::FailNorm;
      break;
    case TypeClass::A1:
    case TypeClass::A2:
      c.scheme = "Conservative";
      c.rollback_strategy = RollbackStrategy::FailNorm;
      break;
  }
  return c;
}

ConfigFile init_config(const Registry& registry, const std::vector<AppSpec>& apps) {
  ConfigFile cfg;
  for (auto id : registry.ids()) cfg.devices[id] = default_device_config(registry.spec(id));
  for (const auto& a : apps) cfg.apps[a.id] = AppConfig{a.suppression_enabled};
  return cfg;
}

ConfigFile default_home_config(const Registry& registry, const std::vector<AppSpec>& apps) {
  auto cfg = init_config(registry, apps);
  using namespace home;
  auto pair = [&](DeviceId a, DeviceId b) {
    if (cfg.devices.count(a) && cfg.devices.count(b)) {
      cfg.devices[a].replicas = {b};
      cfg.devices[b].replicas = {a};
    }
  };
  pair(kSmoke, kSmokeReplica);
  pair(kLight, kLightReplica);
  return cfg;
}

void validate(const ConfigFile& config, const Registry* registry) {
  const auto& g = config.general;
  if (g.identification_upper_bound < 0)
    throw SchemaError("general.identification_upper_bound", "must be >= 0");
  if (g.checkpoint_ttl <= 0) throw SchemaError("general.checkpoint_ttl", "must be > 0");
  if (g.sensor_match_tolerance < 0) throw SchemaError("general.sensor_match_tolerance", "must be >= 0");
  if (g.retry_consecutive_polls < 1) throw SchemaError("general.retry_consecutive_polls", "must be >= 1");
  if (g.redundancy.window <= 0) throw SchemaError("general.redundancy_detection.window", "must be > 0");
  if (g.redundancy.agreement < 0 || g.redundancy.agreement > 1)
    throw SchemaError("general.redundancy_detection.agreement", "must be in [0, 1]");
  for (const auto& s : config.custom_schemes) {
    if (s.steps.empty()) throw SchemaError("schemes." + s.name, "empty step list");
  }
  for (const auto& [id, d] : config.devices) {
    const std::string where = "devices." + std::to_string(to_int(id));
    if (!config.find_scheme(d.scheme)) throw SchemaError(where + ".scheme", "unknown scheme '" + d.scheme + "'");
    if (d.retry_max < 0) throw SchemaError(where + ".retry_max", "must be >= 0");
    if (d.restart_attempts < 1) throw SchemaError(where + ".restart_attempts", "must be >= 1");
    for (auto r : d.replicas) {
      if (r == id) throw SchemaError(where + ".replicas", "device listed as its own replica");
      if (registry && !registry->contains(r)) throw SchemaError(where + ".replicas", "unknown replica");
    }
    if (registry && !registry->contains(id)) throw SchemaError(where, "device not registered");
  }
  if (registry) {
    for (auto id : registry->ids()) {
      if (!config.devices.count(id))
        throw SchemaError("devices." + std::to_string(to_int(id)), "registered device has no entry");
    }
  }
}

namespace {

template <typename T>
T get_field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + "." + key, "wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw SchemaError(where + "." + k, "unknown field");
  }
}

int parse_id(const std::string& key, const std::string& where) {
  try {
    std::size_t used = 0;
    int v = std::stoi(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(where + "." + key, "expected an integer id");
  }
}

}  // namespace

ConfigFile parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("config", e.what());
  }
  reject_unknown(root, {"general", "schemes", "devices", "apps"}, "config");
  ConfigFile cfg;
  if (root.contains("general")) {
    const auto& g = root.at("general");
    reject_unknown(g,
                   {"identification_upper_bound", "checkpoint_ttl", "sensor_match_tolerance",
                    "retry_consecutive_polls", "redundancy_detection"},
                   "general");
    auto& out = cfg.general;
    out.identification_upper_bound =
        get_field(g, "identification_upper_bound", out.identification_upper_bound, "general");
    out.checkpoint_ttl = get_field(g, "checkpoint_ttl", out.checkpoint_ttl, "general");
    out.sensor_match_tolerance = get_field(g, "sensor_match_tolerance", out.sensor_match_tolerance, "general");
    out.retry_consecutive_polls = get_field(g, "retry_consecutive_polls", out.retry_consecutive_polls, "general");
    if (g.contains("redundancy_detection")) {
      const auto& r = g.at("redundancy_detection");
      const std::string where = "general.redundancy_detection";
      reject_unknown(r, {"window", "agreement", "transition_tolerance"}, where);
      out.redundancy.window = get_field(r, "window", out.redundancy.window, where);
      out.redundancy.agreement = get_field(r, "agreement", out.redundancy.agreement, where);
      out.redundancy.transition_tolerance =
          get_field(r, "transition_tolerance", out.redundancy.transition_tolerance, where);
    }
  }
  if (root.contains("schemes")) {
    for (const auto& [name, steps] : root.at("schemes").items()) {
      Scheme s{name, {}};
      if (!steps.is_array()) throw SchemaError("schemes." + name, "expected array of step names");
      for (const auto& st : steps) {
        const auto step = st.is_string() ? step_from(st.get<std::string>()) : std::nullopt;
        if (!step) throw SchemaError("schemes." + name, "unknown step " + st.dump());
        s.steps.push_back(*step);
      }
      cfg.custom_schemes.push_back(std::move(s));
    }
  }
  if (root.contains("devices")) {
    for (const auto& [key, d] : root.at("devices").items()) {
      const std::string where = "devices." + key;
      const DeviceId id{parse_id(key, "devices")};
      reject_unknown(d,
                     {"scheme", "replicas", "rollback_strategy", "retry_max", "restart_attempts",
                      "notify_triggers", "fail_safe_state"},
                     where);
      DeviceConfig dc;
      dc.scheme = get_field(d, "scheme", dc.scheme, where);
      if (d.contains("replicas")) {
        for (const auto& r : d.at("replicas")) {
          if (!r.is_number_integer()) throw SchemaError(where + ".replicas", "expected integer ids");
          dc.replicas.push_back(DeviceId{r.get<int>()});
        }
      }
      if (d.contains("rollback_strategy")) {
        const auto s = rollback_strategy_from(get_field(d, "rollback_strategy", std::string(), where));
        if (!s) throw SchemaError(where + ".rollback_strategy", "unknown strategy");
        dc.rollback_strategy = *s;
      }
      dc.retry_max = get_field(d, "retry_max", dc.retry_max, where);
      dc.restart_attempts = get_field(d, "restart_attempts", dc.restart_attempts, where);
      if (d.contains("notify_triggers")) {
        dc.notify_triggers.clear();
        for (const auto& t : d.at("notify_triggers")) {
          const auto trig = t.is_string() ? notify_trigger_from(t.get<std::string>()) : std::nullopt;
          if (!trig) throw SchemaError(where + ".notify_triggers", "unknown trigger " + t.dump());
          dc.notify_triggers.insert(*trig);
        }
      }
      if (d.contains("fail_safe_state") && !d.at("fail_safe_state").is_null())
        dc.fail_safe_state = get_field(d, "fail_safe_state", 0.0, where);
      cfg.devices[id] = std::move(dc);
    }
  }
  if (root.contains("apps")) {
    for (const auto& [key, a] : root.at("apps").items()) {
      const std::string where = "apps." + key;
      reject_unknown(a, {"suppression_enabled"}, where);
      cfg.apps[AppId{parse_id(key, "apps")}] = AppConfig{get_field(a, "suppression_enabled", false, where)};
    }
  }
  validate(cfg);
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ConfigFile& cfg) {
  const auto& g = cfg.general;
  json root;
  root["general"] = {{"identification_upper_bound", g.identification_upper_bound},
                     {"checkpoint_ttl", g.checkpoint_ttl},
                     {"sensor_match_tolerance", g.sensor_match_tolerance},
                     {"retry_consecutive_polls", g.retry_consecutive_polls},
                     {"redundancy_detection",
                      {{"window", g.redundancy.window},
                       {"agreement", g.redundancy.agreement},
                       {"transition_tolerance", g.redundancy.transition_tolerance}}}};
  if (!cfg.custom_schemes.empty()) {
    json schemes = json::object();
    for (const auto& s : cfg.custom_schemes) {
      json steps = json::array();
      for (auto st : s.steps) steps.push_back(std::string(to_string(st)));
      schemes[s.name] = steps;
    }
    root["schemes"] = schemes;
  }
  json devices = json::object();
  for (const auto& [id, d] : cfg.devices) {
    json replicas = json::array();
    for (auto r : d.replicas) replicas.push_back(to_int(r));
    json triggers = json::array();
    for (auto t : d.notify_triggers) triggers.push_back(std::string(to_string(t)));
    json dj = {{"scheme", d.scheme},
               {"replicas", replicas},
               {"rollback_strategy", std::string(to_string(d.rollback_strategy))},
               {"retry_max", d.retry_max},
               {"restart_attempts", d.restart_attempts},
               {"notify_triggers", triggers}};
    dj["fail_safe_state"] = d.fail_safe_state ? json(*d.fail_safe_state) : json(nullptr);
    devices[std::to_string(to_int(id))] = dj;
  }
  root["devices"] = devices;
  json apps = json::object();
  for (const auto& [id, a] : cfg.apps) apps[std::to_string(to_int(id))] = {{"suppression_enabled", a.suppression_enabled}};
  root["apps"] = apps;
  return root.dump(2);
}

void save_config(const std::filesystem::path& path, const ConfigFile& config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config " + path.string());
  out << config_to_json(config) << '\n';
}

void apply_app_config(const ConfigFile& config, std::vector<AppSpec>& apps) {
  for (auto& a : apps) {
    auto it = config.apps.find(a.id);
    if (it != config.apps.end()) a.suppression_enabled = it->second.suppression_enabled;
  }
}

}  // namespace hearth
