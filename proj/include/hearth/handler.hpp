#pragma once

#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "hearth/handling.hpp"

namespace hearth {

enum class SessionOutcome { InProgress, Repaired, Unrepaired };
std::string_view to_string(SessionOutcome o);

enum class StepStatus {
  Running,    // needs more ticks
  Repaired,   // the fault is handled; the session ends
  Failed,     // advance to the next step
  Skipped,    // not applicable for this device; advance
  Mitigated,  // rollback corrected the environment but not the device
  Terminal,   // notify: the session ends unrepaired
};
std::string_view to_string(StepStatus s);

struct StepRecord {
  Step step = Step::Replicate;
  StepStatus status = StepStatus::Running;
  Tick started = 0;
  Tick finished = 0;
};

struct HandlerSession {
  DeviceId device{};
  FaultReport report;
  Scheme scheme;
  std::size_t step_index = 0;
  Tick started_tick = 0;
  Tick finished_tick = 0;
  SessionOutcome outcome = SessionOutcome::InProgress;
  std::vector<StepRecord> steps;
  bool pre_suppressed = false;
  bool repaired_by_replica = false;
  Tick last_driven = -1;

  std::variant<std::monostate, RetryTask, RestartTask> task;
};

class DuplicateSession : public Error {
 public:
  explicit DuplicateSession(DeviceId id)
      : Error("device " + std::to_string(to_int(id)) + " already has a handling session") {}
};

enum class HandlerMode { Full, SuppressionOnly };

// Drives fault handling one tick at a time: pulls reports from the
// identifier, suppresses, runs each device's scheme, and restores state once
// the device recovers.
class AutoHandler {
 public:
  explicit AutoHandler(HandlerContext& ctx, HandlerMode mode = HandlerMode::Full) : ctx_(ctx), mode_(mode) {}

  void step(Tick now);

  // Opens a session and runs its first step at ctx.now.
  HandlerSession& on_fault_detected(const FaultReport& report);

  // Runs the session's current step for this tick.
  StepStatus execute_step(HandlerSession& session);

  // Devices the handler currently treats as faulty.
  std::set<DeviceId> known_faulty() const;

  const std::map<DeviceId, HandlerSession>& sessions() const { return sessions_; }
  const std::vector<HandlerSession>& finished() const { return finished_; }
  HandlerContext& context() { return ctx_; }
  const RollbackResult* last_rollback() const { return last_rollback_ ? &*last_rollback_ : nullptr; }
  const std::vector<std::size_t>& rollback_actuation_counts() const { return rollback_actuations_; }

 private:
  enum class Watch { Redirect, Unrepaired, Suppressed };

  void drive(HandlerSession& s);
  void finish(HandlerSession& s, SessionOutcome outcome);
  void release_watch(DeviceId device, Watch w);
  void check_watches();
  RollbackSettings rollback_settings(DeviceId trigger) const;

  HandlerContext& ctx_;
  HandlerMode mode_;
  std::map<DeviceId, HandlerSession> sessions_;
  std::vector<HandlerSession> finished_;
  std::map<DeviceId, Watch> watches_;
  std::optional<RollbackResult> last_rollback_;
  std::vector<std::size_t> rollback_actuations_;
};

}  // namespace hearth
