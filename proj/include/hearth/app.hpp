#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hearth/types.hpp"

namespace hearth {

class Registry;

// The hub's view of every device value, notification sinks included.
using StateView = std::map<DeviceId, Value>;

// Trigger predicate: a comparison over one device value, or an all/any
// combination of sub-conditions. A default-constructed condition is true.
struct Condition {
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge, All, Any };

  Op op = Op::All;
  DeviceId device{};
  Value value = 0.0;
  std::vector<Condition> children;

  static Condition compare(DeviceId d, Op op, Value v) { return {op, d, v, {}}; }
  static Condition eq(DeviceId d, Value v) { return compare(d, Op::Eq, v); }
  static Condition all(std::vector<Condition> c) { return {Op::All, {}, 0.0, std::move(c)}; }
  static Condition any(std::vector<Condition> c) { return {Op::Any, {}, 0.0, std::move(c)}; }

  template <typename Lookup>
  bool eval(const Lookup& lookup) const;
  void collect_devices(std::set<DeviceId>& out) const;

  bool operator==(const Condition&) const = default;
};

struct Action {
  DeviceId target{};
  Value value = 0.0;
  bool operator==(const Action&) const = default;
};

// Fires on an event from any device in `on` (or, for clock rules, when the
// time of day equals `at`) if `when` holds against the post-event state.
struct AppRule {
  std::vector<DeviceId> on;
  std::optional<Tick> at;
  Condition when;
  std::vector<Action> actions;
  bool operator==(const AppRule&) const = default;
};

struct AppSpec {
  AppId id{};
  std::string name;
  std::set<DeviceId> subscriptions;
  std::vector<AppRule> rules;
  bool suppression_enabled = false;
  bool operator==(const AppSpec&) const = default;
};

struct Event {
  DeviceId device{};
  Value old_value = 0.0;
  Value new_value = 0.0;
  Tick tick = 0;
};

struct Command {
  AppId app{};
  DeviceId device{};
  Value value = 0.0;
  bool operator==(const Command&) const = default;
};

// Apps halted because a subscribed device is faulty. An app stays halted
// while at least one device holds it.
class AppSuppressions {
 public:
  void suppress(AppId app, DeviceId because) { holds_[app].insert(because); }
  void release(AppId app, DeviceId because);
  bool is_suppressed(AppId app) const;
  std::set<AppId> suppressed_apps() const;
  bool operator==(const AppSuppressions&) const = default;

 private:
  std::map<AppId, std::set<DeviceId>> holds_;
};

// Checks the subscription and actuator-only invariants. Throws ValidationError.
void validate(const AppSpec& app, const Registry* registry = nullptr);

Tick time_of_day(Tick tick);

// The eleven built-in home apps. App11 opens the windows at 07:00 and closes
// them at `evening_close`.
std::vector<AppSpec> builtin_apps(Tick evening_close = 21 * 3600);

// Commands produced by `event`, in app-id order. Apps that are suppressed or
// not subscribed are skipped; commands to suppressed devices and commands
// that would not change the target are dropped.
std::vector<Command> dispatch(const Event& event, const std::vector<AppSpec>& apps, const StateView& view,
                              const Registry& registry, const AppSuppressions* suppressed_apps = nullptr);

// Clock-triggered commands for `tick`.
std::vector<Command> clock_commands(Tick tick, const std::vector<AppSpec>& apps, const StateView& view,
                                    const Registry& registry, const AppSuppressions* suppressed_apps = nullptr);

// Whether setting `device` to `value` would make any installed app emit a
// state-changing command. Pure; ignores suppression.
bool does_actuation_cascade(DeviceId device, Value value, const std::vector<AppSpec>& apps,
                            const StateView& view);

// App rules file: {"apps": [...]}.
std::vector<AppSpec> load_apps(const std::filesystem::path& path);
std::vector<AppSpec> parse_apps(const std::string& json_text);
std::string apps_to_json(const std::vector<AppSpec>& apps);

template <typename Lookup>
bool Condition::eval(const Lookup& lookup) const {
  switch (op) {
    case Op::All:
      for (const auto& c : children) {
        if (!c.eval(lookup)) return false;
      }
      return true;
    case Op::Any:
      for (const auto& c : children) {
        if (c.eval(lookup)) return true;
      }
      return false;
    default:
      break;
  }
  const std::optional<Value> v = lookup(device);
  if (!v) return false;
  switch (op) {
    case Op::Eq: return *v == value;
    case Op::Ne: return *v != value;
    case Op::Lt: return *v < value;
    case Op::Le: return *v <= value;
    case Op::Gt: return *v > value;
    case Op::Ge: return *v >= value;
    default: return false;
  }
}

}  // namespace hearth
