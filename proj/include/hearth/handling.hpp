#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hearth/app.hpp"
#include "hearth/checkpoint.hpp"
#include "hearth/config.hpp"
#include "hearth/fault.hpp"
#include "hearth/registry.hpp"

namespace hearth {

enum class NotifyEvent { FaultOccurred, Repaired, Unrepaired };
std::string_view to_string(NotifyEvent e);

struct NotificationRecord {
  Tick tick = 0;
  DeviceId device{};
  std::optional<FaultKind> kind;
  NotifyEvent outcome = NotifyEvent::FaultOccurred;
  bool operator==(const NotificationRecord&) const = default;
};

// Collects notification records and optionally mirrors them as
// `tick,device,fault_kind,outcome` lines.
class NotificationSink {
 public:
  void attach(std::ostream* out) { outputs_.push_back(out); }
  void write(const NotificationRecord& r);
  const std::vector<NotificationRecord>& records() const { return records_; }
  static std::string format(const NotificationRecord& r);

 private:
  std::vector<NotificationRecord> records_;
  std::vector<std::ostream*> outputs_;
};

struct HandlingCounters {
  std::uint64_t restart_commands = 0;
  std::uint64_t soft_restarts = 0;
  std::uint64_t hard_restarts = 0;
  std::uint64_t rollbacks = 0;
  std::uint64_t rollback_successes = 0;
  std::uint64_t rollback_actuations = 0;
  std::map<DeviceId, std::uint64_t> restarts_by_device;
  std::map<DeviceId, Tick> restart_ms_by_device;
};

// Everything the handling functions touch. Owned by the caller.
struct HandlerContext {
  Registry& registry;
  ConfigFile& config;
  FaultIdentifier& identifier;
  std::vector<AppSpec>& apps;
  AppSuppressions& app_suppressions;
  CheckpointLog& log;
  NotificationSink& notifications;
  HandlingCounters counters;
  Tick now = 0;
};

// Installs a redirect to the first healthy replica in configured order.
bool activate_redundant_device(HandlerContext& ctx, DeviceId device);

enum class RetryOutcome { Resolved, TimedOut, StillFaulty };
std::string_view to_string(RetryOutcome o);

struct RetryArgs {
  // Returns true once the fault is cleared.
  std::function<bool(DeviceId, Tick)> verify;
  std::vector<Value> expected_values;
  std::optional<bool> is_failstop;
};

// Tick-driven retry. `advance` is called once per tick starting at the tick
// the task is created and returns the outcome when finished.
class RetryTask {
 public:
  RetryTask(DeviceId device, RetryArgs args, Tick start) : device_(device), args_(std::move(args)), start_(start) {}
  std::optional<RetryOutcome> advance(HandlerContext& ctx);

 private:
  enum class Phase { Polling, Confirming };
  DeviceId device_;
  RetryArgs args_;
  Tick start_;
  Phase phase_ = Phase::Polling;
  Tick confirm_from_ = 0;
  int streak_ = 0;
};

enum class RestartType { Software, Hardware };

// Restart with acknowledgment, restart delay, and post-restart confirmation.
class RestartTask {
 public:
  RestartTask(DeviceId device, RestartType type, std::optional<FaultKind> reported, Tick start)
      : device_(device), type_(type), reported_(reported), start_(start) {}
  std::optional<bool> advance(HandlerContext& ctx);
  int commands_sent() const { return commands_; }

 private:
  enum class Phase { Command, Restarting, Confirming };
  DeviceId device_;
  RestartType type_;
  std::optional<FaultKind> reported_;
  Tick start_;
  Phase phase_ = Phase::Command;
  Tick ready_at_ = 0;
  Tick confirm_from_ = 0;
  int commands_ = 0;
};

// Writes a record if the device's notify triggers include `event`.
void notify_user(HandlerContext& ctx, DeviceId device, std::optional<FaultKind> kind, NotifyEvent event);

struct TransactionLog {
  enum class Status { Open, Committed, Aborted, PartialAbort };
  std::vector<std::pair<DeviceId, Value>> entries;
  Status status = Status::Open;
  std::optional<std::size_t> aborted_at;
};

// All-or-nothing actuation list with an undo log. Throws NotActuator before
// touching anything if a target is not an actuator.
TransactionLog transaction(Registry& registry, const std::vector<std::pair<DeviceId, Value>>& actuations, Tick tick);

void suppress_device(Registry& registry, DeviceId device);
void unsuppress_device(Registry& registry, DeviceId device);

// Halts every suppression-enabled app subscribed to `device`.
void suppress_apps_for(DeviceId device, const std::vector<AppSpec>& apps, AppSuppressions& supp);
void release_apps_for(DeviceId device, const std::vector<AppSpec>& apps, AppSuppressions& supp);

// Configuration API. Each returns true on success and throws ValidationError
// naming the field otherwise. add_device reruns redundancy detection when a
// history is supplied.
using StateHistory = std::map<DeviceId, std::vector<Value>>;
bool add_device(HandlerContext& ctx, const DeviceSpec& spec, const StateHistory* history = nullptr);
bool remove_device(HandlerContext& ctx, DeviceId id);
bool update_device_config(HandlerContext& ctx, DeviceId id, const DeviceConfig& options);
bool update_app_config(HandlerContext& ctx, AppId id, const AppConfig& options);

struct StreamStats {
  double agreement = 0.0;  // fraction of ticks with equal values
  double rate_gap = 1.0;   // largest per-state change-rate difference
};

// Compares the trailing `window` ticks of two streams.
StreamStats compare_streams(const std::vector<Value>& a, const std::vector<Value>& b, Tick window);

// Sensors of the same type class whose streams agree over the detection
// window and whose per-state change rates converge. Symmetric, irreflexive.
std::vector<std::pair<DeviceId, DeviceId>> detect_redundant_devices(const StateHistory& history,
                                                                    const Registry& registry,
                                                                    const RedundancyDetectionConfig& cfg);

// Appends detected pairs to the replica lists, after any existing entries.
void record_replicas(ConfigFile& config, const std::vector<std::pair<DeviceId, DeviceId>>& pairs);

}  // namespace hearth
