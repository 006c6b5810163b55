#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hearth/app.hpp"
#include "hearth/device.hpp"
#include "hearth/types.hpp"

namespace hearth {

class Registry;

// Handling functions a scheme can sequence. Numbering follows the built-in
// scheme table: (1) Replicate ... (6) Notify.
enum class Step { Replicate = 1, Retry = 2, SoftRestart = 3, HardRestart = 4, Rollback = 5, Notify = 6 };

std::string_view to_string(Step s);
std::optional<Step> step_from(std::string_view s);

struct Scheme {
  std::string name;
  std::vector<Step> steps;
  bool operator==(const Scheme&) const = default;
};

// Conservative, TransientResistant, LongRestart, TimeSensitive.
const std::vector<Scheme>& builtin_schemes();

enum class NotifyTrigger { OnFault, OnRepaired, OnUnrepaired };
std::string_view to_string(NotifyTrigger t);
std::optional<NotifyTrigger> notify_trigger_from(std::string_view s);

struct RedundancyDetectionConfig {
  Tick window = 5000;
  double agreement = 0.99;
  double transition_tolerance = 0.05;
  bool operator==(const RedundancyDetectionConfig&) const = default;
};

struct GeneralConfig {
  Tick identification_upper_bound = 5;
  Tick checkpoint_ttl = 20000;
  // Absolute tolerance when matching non-binary sensor values.
  double sensor_match_tolerance = 2.0;
  // Consecutive matching polls before retry declares a fault resolved.
  int retry_consecutive_polls = 3;
  RedundancyDetectionConfig redundancy;
  bool operator==(const GeneralConfig&) const = default;
};

struct DeviceConfig {
  std::string scheme = "Conservative";
  std::vector<DeviceId> replicas;
  RollbackStrategy rollback_strategy = RollbackStrategy::FailNorm;
  Tick retry_max = 30;
  int restart_attempts = 3;
  std::set<NotifyTrigger> notify_triggers{NotifyTrigger::OnUnrepaired};
  std::optional<Value> fail_safe_state;
  bool operator==(const DeviceConfig&) const = default;
};

struct AppConfig {
  bool suppression_enabled = false;
  bool operator==(const AppConfig&) const = default;
};

struct ConfigFile {
  GeneralConfig general;
  std::vector<Scheme> custom_schemes;
  std::map<DeviceId, DeviceConfig> devices;
  std::map<AppId, AppConfig> apps;

  // Looks up a built-in or custom scheme by name.
  std::optional<Scheme> find_scheme(const std::string& name) const;
  const DeviceConfig& device(DeviceId id) const;
  DeviceConfig& device(DeviceId id);

  bool operator==(const ConfigFile&) const = default;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Defaults for one device by type class.
DeviceConfig default_device_config(const DeviceSpec& spec);

// Per-device defaults by type class (conservative fallback for anything
// unknown) and app entries with suppression disabled.
ConfigFile init_config(const Registry& registry, const std::vector<AppSpec>& apps);

// init_config plus the replicated smoke detector and lights of the default home.
ConfigFile default_home_config(const Registry& registry, const std::vector<AppSpec>& apps);

// Throws SchemaError naming the offending field path.
void validate(const ConfigFile& config, const Registry* registry = nullptr);

ConfigFile parse_config(const std::string& json_text);
ConfigFile load_config(const std::filesystem::path& path);
std::string config_to_json(const ConfigFile& config);
void save_config(const std::filesystem::path& path, const ConfigFile& config);

// Copies per-app suppression flags from the config onto the app list.
void apply_app_config(const ConfigFile& config, std::vector<AppSpec>& apps);

}  // namespace hearth
