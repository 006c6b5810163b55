#include "hearth/app.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hearth/device.hpp"
#include "hearth/registry.hpp"
#include "json.hpp"

namespace hearth {

using nlohmann::json;

void AppSuppressions::release(AppId app, DeviceId because) {
  auto it = holds_.find(app);
  if (it == holds_.end()) return;
  it->second.erase(because);
  if (it->second.empty()) holds_.erase(it);
}

bool AppSuppressions::is_suppressed(AppId app) const {
  auto it = holds_.find(app);
  return it != holds_.end() && !it->second.empty();
}

std::set<AppId> AppSuppressions::suppressed_apps() const {
  std::set<AppId> out;
  for (const auto& [app, devs] : holds_) out.insert(app);
  return out;
}

void Condition::collect_devices(std::set<DeviceId>& out) const {
  if (op == Op::All || op == Op::Any) {
    for (const auto& c : children) c.collect_devices(out);
    return;
  }
  out.insert(device);
}

Tick time_of_day(Tick tick) { return ((tick % kTicksPerDay) + kTicksPerDay) % kTicksPerDay; }

void validate(const AppSpec& app, const Registry* registry) {
  const std::string where = "app " + std::to_string(to_int(app.id));
  for (std::size_t i = 0; i < app.rules.size(); ++i) {
    const auto& r = app.rules[i];
    const std::string rw = where + ".rules[" + std::to_string(i) + "]";
    if (r.on.empty() && !r.at) throw ValidationError(rw, "rule needs an event trigger or a clock time");
    std::set<DeviceId> referenced(r.on.begin(), r.on.end());
    r.when.collect_devices(referenced);
    for (auto d : referenced) {
      if (!app.subscriptions.count(d))
        throw ValidationError(rw, "device " + std::to_string(to_int(d)) + " not in subscriptions");
    }
    if (registry) {
      for (const auto& a : r.actions) {
        if (!registry->contains(a.target)) throw UnknownDevice(a.target);
        if (!registry->spec(a.target).is_actuator())
          throw ValidationError(rw + ".actions", "target " + std::to_string(to_int(a.target)) +
                                                     " is not an actuator");
      }
    }
  }
}

std::vector<AppSpec> builtin_apps(Tick evening_close) {
  using namespace home;
  using Op = Condition::Op;
  auto cmp = Condition::compare;
  auto eq = Condition::eq;
  std::vector<AppSpec> apps;
  auto add = [&](int id, const char* name, std::set<DeviceId> subs, std::vector<AppRule> rules) {
    apps.push_back(AppSpec{AppId{id}, name, std::move(subs), std::move(rules), false});
  };
  const std::vector<Action> lights_on{{kLight, 1}, {kLightReplica, 1}};
  const std::vector<Action> lights_off{{kLight, 0}, {kLightReplica, 0}};
  const std::vector<Action> windows_open{{kWindow, 1}, {kWindow2, 1}};
  const std::vector<Action> windows_closed{{kWindow, 0}, {kWindow2, 0}};

  add(1, "Motion-Activated-Lights", {kMotion},
      {{{kMotion}, {}, eq(kMotion, 1), lights_on}, {{kMotion}, {}, eq(kMotion, 0), lights_off}});
  add(2, "Smoke-Alarm", {kSmoke},
      {{{kSmoke}, {}, eq(kSmoke, 1), {{kAlarm, 1}, {kDoorLock, 0}}},
       {{kSmoke}, {}, eq(kSmoke, 0), {{kAlarm, 0}}}});
  add(3, "Temperature-Control", {kTemperature},
      {{{kTemperature}, {}, cmp(kTemperature, Op::Lt, 70), {{kHeater, 1}, {kAirConditioner, 0}}},
       {{kTemperature}, {}, cmp(kTemperature, Op::Gt, 80), {{kAirConditioner, 1}, {kHeater, 0}}},
       {{kTemperature},
        {},
        Condition::all({cmp(kTemperature, Op::Ge, 70), cmp(kTemperature, Op::Le, 80)}),
        {{kHeater, 0}, {kAirConditioner, 0}}}});
  add(4, "Water-Leak-Detector", {kLeak},
      {{{kLeak}, {}, eq(kLeak, 1), {{kAlarm, 1}, {kWaterValve, 0}}},
       {{kLeak}, {}, eq(kLeak, 0), {{kAlarm, 0}, {kWaterValve, 1}}}});
  add(5, "Welcome-Home", {kPresence}, {{{kPresence}, {}, eq(kPresence, 1), {{kDoorLock, 0}, {kCoffee, 1}}}});
  add(6, "Secure-Patio", {kPresence, kContact},
      {{{kPresence, kContact}, {}, Condition::all({eq(kPresence, 0), eq(kContact, 1)}), {{kSmsPatio, 1}}},
       {{kPresence, kContact}, {}, Condition::any({eq(kPresence, 1), eq(kContact, 0)}), {{kSmsPatio, 0}}}});
  add(7, "Energy-Saver", {kWindow, kWindow2, kHeater, kAirConditioner},
      {{{kWindow, kWindow2, kHeater, kAirConditioner},
        {},
        Condition::all({Condition::any({eq(kWindow, 1), eq(kWindow2, 1)}),
                        Condition::any({eq(kHeater, 1), eq(kAirConditioner, 1)})}),
        windows_closed}});
  add(8, "Secure-Home", {kPresence},
      {{{kPresence}, {}, eq(kPresence, 0), {{kDoorLock, 1}, {kWindow, 0}, {kWindow2, 0}}}});
  add(9, "Intruder-Detector", {kPresence, kMotion},
      {{{kPresence, kMotion}, {}, Condition::all({eq(kPresence, 0), eq(kMotion, 1)}), {{kSmsIntruder, 1}}},
       {{kPresence, kMotion}, {}, Condition::any({eq(kPresence, 1), eq(kMotion, 0)}), {{kSmsIntruder, 0}}}});
  add(10, "Alarm-Safety", {kAlarm}, {{{kAlarm}, {}, eq(kAlarm, 1), lights_on}});
  add(11, "Morning-Air", {},
      {{{}, Tick{7 * 3600}, {}, windows_open}, {{}, evening_close, {}, windows_closed}});
  return apps;
}

namespace {

bool effective(const StateView& view, const Action& a, DeviceId overlay_device, Value overlay_value) {
  const Value current = a.target == overlay_device ? overlay_value : [&] {
    auto it = view.find(a.target);
    return it == view.end() ? Value{-1} : it->second;
  }();
  return current != a.value;
}

template <typename RulePredicate>
std::vector<Command> fire(const std::vector<AppSpec>& apps, const StateView& view, const Registry* registry,
                          const AppSuppressions* suppressed_apps, DeviceId overlay_device, Value overlay_value,
                          std::optional<DeviceId> subscribed_to, RulePredicate&& rule_applies) {
  auto lookup = [&](DeviceId d) -> std::optional<Value> {
    if (d == overlay_device) return overlay_value;
    auto it = view.find(d);
    if (it == view.end()) return std::nullopt;
    return it->second;
  };
  std::vector<const AppSpec*> ordered;
  for (const auto& a : apps) ordered.push_back(&a);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const AppSpec* a, const AppSpec* b) { return a->id < b->id; });

  std::vector<Command> out;
  for (const AppSpec* app : ordered) {
    if (subscribed_to && !app->subscriptions.count(*subscribed_to)) continue;
    if (suppressed_apps && suppressed_apps->is_suppressed(app->id)) continue;
    for (const auto& rule : app->rules) {
      if (!rule_applies(rule) || !rule.when.eval(lookup)) continue;
      for (const auto& a : rule.actions) {
        if (registry && (!registry->contains(a.target) || registry->is_suppressed(a.target))) continue;
        if (!effective(view, a, overlay_device, overlay_value)) continue;
        out.push_back(Command{app->id, a.target, a.value});
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Command> dispatch(const Event& event, const std::vector<AppSpec>& apps, const StateView& view,
                              const Registry& registry, const AppSuppressions* suppressed_apps) {
  if (registry.contains(event.device) && registry.is_suppressed(event.device)) return {};
  return fire(apps, view, &registry, suppressed_apps, event.device, event.new_value, event.device,
              [&](const AppRule& r) {
                return std::find(r.on.begin(), r.on.end(), event.device) != r.on.end();
              });
}

std::vector<Command> clock_commands(Tick tick, const std::vector<AppSpec>& apps, const StateView& view,
                                    const Registry& registry, const AppSuppressions* suppressed_apps) {
  const Tick tod = time_of_day(tick);
  return fire(apps, view, &registry, suppressed_apps, DeviceId{-1}, 0.0, std::nullopt,
              [&](const AppRule& r) { return r.at && *r.at == tod; });
}

bool does_actuation_cascade(DeviceId device, Value value, const std::vector<AppSpec>& apps,
                            const StateView& view) {
  return !fire(apps, view, nullptr, nullptr, device, value, device, [&](const AppRule& r) {
            return std::find(r.on.begin(), r.on.end(), device) != r.on.end();
          }).empty();
}

// --- JSON -----------------------------------------------------------------

namespace {

const std::map<std::string, Condition::Op> kOps = {
    {"==", Condition::Op::Eq}, {"!=", Condition::Op::Ne}, {"<", Condition::Op::Lt},
    {"<=", Condition::Op::Le}, {">", Condition::Op::Gt},  {">=", Condition::Op::Ge}};

Condition parse_condition(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected object");
  if (j.contains("all") || j.contains("any")) {
    const bool all = j.contains("all");
    const auto& arr = j.at(all ? "all" : "any");
    if (!arr.is_array() || j.size() != 1) throw ValidationError(where, "malformed all/any");
    std::vector<Condition> kids;
    for (std::size_t i = 0; i < arr.size(); ++i)
      kids.push_back(parse_condition(arr[i], where + "[" + std::to_string(i) + "]"));
    return all ? Condition::all(std::move(kids)) : Condition::any(std::move(kids));
  }
  for (const auto& [k, v] : j.items()) {
    if (k != "device" && k != "op" && k != "value") throw ValidationError(where + "." + k, "unknown field");
  }
  auto op = kOps.find(j.at("op").get<std::string>());
  if (op == kOps.end()) throw ValidationError(where + ".op", "unknown comparator");
  return Condition::compare(DeviceId{j.at("device").get<int>()}, op->second, j.at("value").get<double>());
}

json condition_json(const Condition& c) {
  if (c.op == Condition::Op::All || c.op == Condition::Op::Any) {
    json arr = json::array();
    for (const auto& k : c.children) arr.push_back(condition_json(k));
    return {{c.op == Condition::Op::All ? "all" : "any", arr}};
  }
  std::string op;
  for (const auto& [name, v] : kOps) {
    if (v == c.op) op = name;
  }
  return {{"device", to_int(c.device)}, {"op", op}, {"value", c.value}};
}

Tick parse_clock(const json& j, const std::string& where) {
  if (j.is_number_integer()) return j.get<Tick>();
  const auto s = j.get<std::string>();
  int h = 0, m = 0;
  if (std::sscanf(s.c_str(), "%d:%d", &h, &m) != 2 || h < 0 || h > 23 || m < 0 || m > 59)
    throw ValidationError(where, "expected HH:MM");
  return Tick{h} * 3600 + m * 60;
}

std::string clock_text(Tick t) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(t / 3600), static_cast<int>((t / 60) % 60));
  return buf;
}

}  // namespace

std::vector<AppSpec> parse_apps(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("apps", e.what());
  }
  if (!root.is_object() || !root.contains("apps") || !root.at("apps").is_array())
    throw ValidationError("apps", "expected {\"apps\": [...]}");
  std::vector<AppSpec> out;
  std::set<AppId> seen;
  const auto& arr = root.at("apps");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& j = arr[i];
    const std::string where = "apps[" + std::to_string(i) + "]";
    try {
      for (const auto& [k, v] : j.items()) {
        if (k != "id" && k != "name" && k != "subscriptions" && k != "rules" && k != "suppression_enabled")
          throw ValidationError(where + "." + k, "unknown field");
      }
      AppSpec app;
      app.id = AppId{j.at("id").get<int>()};
      app.name = j.value("name", std::string());
      app.suppression_enabled = j.value("suppression_enabled", false);
      const bool explicit_subs = j.contains("subscriptions");
      if (explicit_subs) {
        for (int d : j.at("subscriptions")) app.subscriptions.insert(DeviceId{d});
      }
      const auto& rules = j.at("rules");
      for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto& rj = rules[r];
        const std::string rw = where + ".rules[" + std::to_string(r) + "]";
        for (const auto& [k, v] : rj.items()) {
          if (k != "on" && k != "at" && k != "when" && k != "actions")
            throw ValidationError(rw + "." + k, "unknown field");
        }
        AppRule rule;
        if (rj.contains("on")) {
          for (int d : rj.at("on")) rule.on.push_back(DeviceId{d});
        }
        if (rj.contains("at")) rule.at = parse_clock(rj.at("at"), rw + ".at");
        if (rj.contains("when")) rule.when = parse_condition(rj.at("when"), rw + ".when");
        for (const auto& aj : rj.at("actions"))
          rule.actions.push_back(Action{DeviceId{aj.at("device").get<int>()}, aj.at("value").get<double>()});
        if (!explicit_subs) {
          app.subscriptions.insert(rule.on.begin(), rule.on.end());
          rule.when.collect_devices(app.subscriptions);
        }
        app.rules.push_back(std::move(rule));
      }
      if (!seen.insert(app.id).second) throw ValidationError(where + ".id", "duplicate app id");
      validate(app);
      out.push_back(std::move(app));
    } catch (const json::exception& e) {
      throw ValidationError(where, e.what());
    }
  }
  return out;
}

std::vector<AppSpec> load_apps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rules file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_apps(ss.str());
}

std::string apps_to_json(const std::vector<AppSpec>& apps) {
  json arr = json::array();
  for (const auto& a : apps) {
    json rules = json::array();
    for (const auto& r : a.rules) {
      json rj = json::object();
      if (!r.on.empty()) {
        json on = json::array();
        for (auto d : r.on) on.push_back(to_int(d));
        rj["on"] = on;
      }
      if (r.at) rj["at"] = clock_text(*r.at);
      if (!(r.when == Condition{})) rj["when"] = condition_json(r.when);
      json actions = json::array();
      for (const auto& act : r.actions) actions.push_back({{"device", to_int(act.target)}, {"value", act.value}});
      rj["actions"] = actions;
      rules.push_back(rj);
    }
    json subs = json::array();
    for (auto d : a.subscriptions) subs.push_back(to_int(d));
    arr.push_back({{"id", to_int(a.id)},
                   {"name", a.name},
                   {"suppression_enabled", a.suppression_enabled},
                   {"subscriptions", subs},
                   {"rules", rules}});
  }
  return json{{"apps", arr}}.dump(2);
}

}  // namespace hearth
