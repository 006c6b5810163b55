#include "hearth/handler.hpp"

namespace hearth {

std::string_view to_string(SessionOutcome o) {
  switch (o) {
    case SessionOutcome::InProgress: return "InProgress";
    case SessionOutcome::Repaired: return "Repaired";
    case SessionOutcome::Unrepaired: return "Unrepaired";
  }
  return "?";
}

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Running: return "Running";
    case StepStatus::Repaired: return "Repaired";
    case StepStatus::Failed: return "Failed";
    case StepStatus::Skipped: return "Skipped";
    case StepStatus::Mitigated: return "Mitigated";
    case StepStatus::Terminal: return "Terminal";
  }
  return "?";
}

void AutoHandler::step(Tick now) {
  ctx_.now = now;
  const auto reports = ctx_.identifier.identify(ctx_.registry.faults(), now);
  check_watches();
  for (const auto& r : reports) {
    if (sessions_.count(r.device)) continue;  // coalesced into the open session
    if (auto w = watches_.find(r.device); w != watches_.end()) release_watch(r.device, w->second);
    if (mode_ == HandlerMode::SuppressionOnly) {
      ctx_.registry.suppress(r.device);
      suppress_apps_for(r.device, ctx_.apps, ctx_.app_suppressions);
      watches_[r.device] = Watch::Suppressed;
      continue;
    }
    on_fault_detected(r);
  }
  // One step boundary per tick; sessions opened above already ran.
  std::vector<DeviceId> due;
  for (const auto& [d, s] : sessions_) {
    if (s.last_driven < now) due.push_back(d);
  }
  for (auto d : due) {
    if (auto it = sessions_.find(d); it != sessions_.end()) drive(it->second);
  }
}

HandlerSession& AutoHandler::on_fault_detected(const FaultReport& report) {
  if (sessions_.count(report.device)) throw DuplicateSession(report.device);
  HandlerSession s;
  s.device = report.device;
  s.report = report;
  s.started_tick = ctx_.now;
  const auto& dc = ctx_.config.device(report.device);
  s.scheme = ctx_.config.find_scheme(dc.scheme).value_or(builtin_schemes().front());
  s.pre_suppressed = ctx_.registry.is_suppressed(report.device);
  ctx_.registry.suppress(report.device);
  suppress_apps_for(report.device, ctx_.apps, ctx_.app_suppressions);
  notify_user(ctx_, report.device, report.kind, NotifyEvent::FaultOccurred);
  auto& slot = sessions_.emplace(report.device, std::move(s)).first->second;
  const DeviceId device = report.device;
  drive(slot);
  auto it = sessions_.find(device);
  if (it != sessions_.end()) return it->second;
  return finished_.back();
}

StepStatus AutoHandler::execute_step(HandlerSession& s) {
  const Step step = s.scheme.steps.at(s.step_index);
  const Tick now = ctx_.now;
  const bool failstop = s.report.kind && is_fail_stop(*s.report.kind);
  switch (step) {
    case Step::Replicate:
      return activate_redundant_device(ctx_, s.device) ? StepStatus::Repaired : StepStatus::Failed;

    case Step::Retry: {
      if (!std::holds_alternative<RetryTask>(s.task)) {
        const FaultIdentifier& id = ctx_.identifier;
        RetryArgs args;
        args.verify = [&id](DeviceId d, Tick t) { return !id.is_faulty(d, t); };
        args.is_failstop = failstop;
        s.task.emplace<RetryTask>(s.device, std::move(args), now);
      }
      const auto out = std::get<RetryTask>(s.task).advance(ctx_);
      if (!out) return StepStatus::Running;
      s.task = std::monostate{};
      return *out == RetryOutcome::Resolved ? StepStatus::Repaired : StepStatus::Failed;
    }

    case Step::SoftRestart:
    case Step::HardRestart: {
      if (!std::holds_alternative<RestartTask>(s.task)) {
        const auto type = step == Step::SoftRestart ? RestartType::Software : RestartType::Hardware;
        s.task.emplace<RestartTask>(s.device, type, s.report.kind, now);
      }
      const auto out = std::get<RestartTask>(s.task).advance(ctx_);
      if (!out) return StepStatus::Running;
      s.task = std::monostate{};
      return *out ? StepStatus::Repaired : StepStatus::Failed;
    }

    case Step::Rollback: {
      const auto settings = rollback_settings(s.device);
      if (settings.strategy == RollbackStrategy::Disabled) return StepStatus::Skipped;
      ++ctx_.counters.rollbacks;
      auto result = rollback(ctx_.log, ctx_.registry, settings, known_faulty(), now);
      if (result.success) {
        ++ctx_.counters.rollback_successes;
        ctx_.counters.rollback_actuations += result.actuated.size();
        rollback_actuations_.push_back(result.actuated.size());
      }
      last_rollback_ = std::move(result);
      if (!ctx_.identifier.is_faulty(s.device, now)) return StepStatus::Repaired;
      return last_rollback_->success ? StepStatus::Mitigated : StepStatus::Failed;
    }

    case Step::Notify:
      return StepStatus::Terminal;
  }
  return StepStatus::Failed;
}

void AutoHandler::drive(HandlerSession& s) {
  const Tick now = ctx_.now;
  s.last_driven = now;
  if (s.steps.empty() || s.steps.back().status != StepStatus::Running) {
    s.steps.push_back({s.scheme.steps.at(s.step_index), StepStatus::Running, now, now});
  }
  const auto status = execute_step(s);
  auto& rec = s.steps.back();
  rec.status = status;
  rec.finished = now;
  switch (status) {
    case StepStatus::Running:
      return;
    case StepStatus::Repaired:
      s.repaired_by_replica = rec.step == Step::Replicate;
      finish(s, SessionOutcome::Repaired);
      return;
    case StepStatus::Terminal:
      finish(s, SessionOutcome::Unrepaired);
      return;
    case StepStatus::Failed:
    case StepStatus::Skipped:
    case StepStatus::Mitigated:
      if (++s.step_index >= s.scheme.steps.size()) finish(s, SessionOutcome::Unrepaired);
      return;
  }
}

void AutoHandler::finish(HandlerSession& s, SessionOutcome outcome) {
  const DeviceId d = s.device;
  s.outcome = outcome;
  s.finished_tick = ctx_.now;
  if (outcome == SessionOutcome::Repaired) {
    if (!s.pre_suppressed) ctx_.registry.unsuppress(d);
    release_apps_for(d, ctx_.apps, ctx_.app_suppressions);
    ctx_.registry.clear_override(d);
    if (s.repaired_by_replica) watches_[d] = Watch::Redirect;
    notify_user(ctx_, d, s.report.kind, NotifyEvent::Repaired);
  } else {
    notify_user(ctx_, d, s.report.kind, NotifyEvent::Unrepaired);
    watches_[d] = Watch::Unrepaired;
  }
  auto node = sessions_.extract(d);
  finished_.push_back(std::move(node.mapped()));
}

void AutoHandler::release_watch(DeviceId d, Watch w) {
  watches_.erase(d);
  auto& reg = ctx_.registry;
  if (w == Watch::Redirect) {
    if (auto to = reg.redirect_of(d)) {
      const Value v = reg.commanded(*to);
      reg.clear_redirect(d);
      // Bring an actuator back in line with what its replica was told.
      if (reg.spec(d).is_actuator() && reg.commanded(d) != v) reg.actuate(d, v, ctx_.now);
    }
    return;
  }
  reg.unsuppress(d);
  release_apps_for(d, ctx_.apps, ctx_.app_suppressions);
  reg.clear_override(d);
}

void AutoHandler::check_watches() {
  std::vector<std::pair<DeviceId, Watch>> done;
  for (const auto& [d, w] : watches_) {
    if (!ctx_.identifier.is_faulty(d, ctx_.now)) done.emplace_back(d, w);
  }
  for (const auto& [d, w] : done) release_watch(d, w);
}

std::set<DeviceId> AutoHandler::known_faulty() const {
  std::set<DeviceId> out;
  for (const auto& [d, s] : sessions_) out.insert(d);
  for (const auto& [d, w] : watches_) {
    if (w != Watch::Redirect) out.insert(d);
  }
  return out;
}

RollbackSettings AutoHandler::rollback_settings(DeviceId trigger) const {
  RollbackSettings st;
  st.strategy = ctx_.config.device(trigger).rollback_strategy;
  st.rules = MatchRules::from_registry(ctx_.registry, ctx_.config.general.sensor_match_tolerance);
  for (auto id : ctx_.registry.actuator_ids()) {
    auto it = ctx_.config.devices.find(id);
    std::optional<Value> fs = it != ctx_.config.devices.end() ? it->second.fail_safe_state : std::nullopt;
    if (!fs) fs = ctx_.registry.spec(id).fail_safe_state;
    if (fs) st.fail_safe[id] = *fs;
  }
  return st;
}

}  // namespace hearth
