#include "hearth/handling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace hearth {

std::string_view to_string(NotifyEvent e) {
  switch (e) {
    case NotifyEvent::FaultOccurred: return "fault_occurred";
    case NotifyEvent::Repaired: return "repaired";
    case NotifyEvent::Unrepaired: return "unrepaired";
  }
  return "?";
}

std::string_view to_string(RetryOutcome o) {
  switch (o) {
    case RetryOutcome::Resolved: return "Resolved";
    case RetryOutcome::TimedOut: return "TimedOut";
    case RetryOutcome::StillFaulty: return "StillFaulty";
  }
  return "?";
}

std::string NotificationSink::format(const NotificationRecord& r) {
  std::ostringstream os;
  os << r.tick << ',' << to_int(r.device) << ',' << (r.kind ? to_string(*r.kind) : std::string_view("UNKNOWN")) << ','
     << to_string(r.outcome);
  return os.str();
}

void NotificationSink::write(const NotificationRecord& r) {
  records_.push_back(r);
  for (auto* out : outputs_) *out << format(r) << '\n';
}

namespace {

DeviceConfig config_or_default(const HandlerContext& ctx, DeviceId id) {
  auto it = ctx.config.devices.find(id);
  return it == ctx.config.devices.end() ? DeviceConfig{} : it->second;
}

void lift(HandlerContext& ctx, DeviceId d) {
  ctx.registry.unsuppress(d);
  release_apps_for(d, ctx.apps, ctx.app_suppressions);
}

void reinstate(HandlerContext& ctx, DeviceId d) {
  ctx.registry.suppress(d);
  suppress_apps_for(d, ctx.apps, ctx.app_suppressions);
}

}  // namespace

bool activate_redundant_device(HandlerContext& ctx, DeviceId device) {
  for (auto r : config_or_default(ctx, device).replicas) {
    if (!ctx.registry.contains(r) || ctx.registry.is_suppressed(r) || ctx.registry.redirect_of(r)) continue;
    if (ctx.identifier.is_faulty(r, ctx.now)) continue;
    ctx.registry.redirect(device, r);
    return true;
  }
  return false;
}

std::optional<RetryOutcome> RetryTask::advance(HandlerContext& ctx) {
  const Tick now = ctx.now;
  if (phase_ == Phase::Polling) {
    if (now < start_ + config_or_default(ctx, device_).retry_max) {
      if (args_.verify) {
        if (args_.verify(device_, now)) return RetryOutcome::Resolved;
      } else if (!args_.expected_values.empty() || args_.is_failstop.value_or(false)) {
        const auto st = ctx.registry.observe(device_, now);
        const auto& ev = args_.expected_values;
        const bool hit =
            st.responsive() && (ev.empty() || std::find(ev.begin(), ev.end(), st.value) != ev.end());
        streak_ = hit ? streak_ + 1 : 0;
        if (streak_ >= ctx.config.general.retry_consecutive_polls) return RetryOutcome::Resolved;
      }
      return std::nullopt;
    }
    if (args_.is_failstop.value_or(false)) return RetryOutcome::TimedOut;
    lift(ctx, device_);
    phase_ = Phase::Confirming;
    confirm_from_ = now;
  }
  if (ctx.identifier.is_faulty(device_, now)) {
    reinstate(ctx, device_);
    return RetryOutcome::StillFaulty;
  }
  if (now - confirm_from_ >= ctx.config.general.identification_upper_bound) return RetryOutcome::Resolved;
  return std::nullopt;
}

std::optional<bool> RestartTask::advance(HandlerContext& ctx) {
  const Tick now = ctx.now;
  auto& reg = ctx.registry;
  const bool soft = type_ == RestartType::Software;
  if (phase_ == Phase::Command) {
    const auto& spec = reg.spec(device_);
    if (!(soft ? spec.supports_soft_restart : spec.supports_hard_restart)) return false;
    const int attempts = config_or_default(ctx, device_).restart_attempts;
    const auto* f = reg.fault_on(device_);
    const bool silent =
        f && (f->spec.kind == FaultKind::Power || f->spec.kind == FaultKind::Communication);
    if (silent) {
      commands_ = attempts;
      ctx.counters.restart_commands += static_cast<std::uint64_t>(attempts);
      return false;
    }
    commands_ = 1;
    ++ctx.counters.restart_commands;
    ++(soft ? ctx.counters.soft_restarts : ctx.counters.hard_restarts);
    const double ms = soft ? spec.soft_restart_ms : spec.hard_restart_ms;
    ++ctx.counters.restarts_by_device[device_];
    ctx.counters.restart_ms_by_device[device_] += static_cast<Tick>(ms);
    ready_at_ = now + std::max<Tick>(1, static_cast<Tick>(std::ceil(ms / 1000.0)));
    phase_ = Phase::Restarting;
    return std::nullopt;
  }
  if (phase_ == Phase::Restarting) {
    if (now < ready_at_) return std::nullopt;
    if (const auto* f = reg.fault_on(device_)) {
      const auto fix = f->spec.fixability;
      if ((soft && fix == Fixability::SoftFixable) || (!soft && fix == Fixability::HardFixable))
        reg.clear_fault(device_);
    }
    const auto* f = reg.fault_on(device_);
    const auto kind = reported_ ? reported_ : (f ? std::optional(f->spec.kind) : std::nullopt);
    if (kind && is_fail_stop(*kind)) return !ctx.identifier.is_faulty(device_, now);
    lift(ctx, device_);
    phase_ = Phase::Confirming;
    confirm_from_ = now;
  }
  if (ctx.identifier.is_faulty(device_, now)) {
    reinstate(ctx, device_);
    return false;
  }
  if (now - confirm_from_ >= ctx.config.general.identification_upper_bound) return true;
  return std::nullopt;
}

void notify_user(HandlerContext& ctx, DeviceId device, std::optional<FaultKind> kind, NotifyEvent event) {
  const auto triggers = config_or_default(ctx, device).notify_triggers;
  const NotifyTrigger needed = event == NotifyEvent::FaultOccurred ? NotifyTrigger::OnFault
                               : event == NotifyEvent::Repaired    ? NotifyTrigger::OnRepaired
                                                                   : NotifyTrigger::OnUnrepaired;
  if (triggers.count(needed)) ctx.notifications.write({ctx.now, device, kind, event});
}

TransactionLog transaction(Registry& registry, const std::vector<std::pair<DeviceId, Value>>& actuations, Tick tick) {
  for (const auto& [id, v] : actuations) {
    if (!registry.spec(id).is_actuator()) throw NotActuator(id);
  }
  TransactionLog log;
  for (std::size_t i = 0; i < actuations.size(); ++i) {
    const auto [id, v] = actuations[i];
    log.entries.emplace_back(id, registry.commanded(id));
    if (registry.actuate(id, v, tick) == ActuationResult::Ok) continue;

    log.aborted_at = i;
    bool restored = true;
    for (auto it = log.entries.rbegin(); it != log.entries.rend(); ++it) {
      if (registry.commanded(it->first) != it->second) registry.actuate(it->first, it->second, tick);
      restored = restored && registry.commanded(it->first) == it->second;
    }
    log.status = restored ? TransactionLog::Status::Aborted : TransactionLog::Status::PartialAbort;
    return log;
  }
  log.status = TransactionLog::Status::Committed;
  return log;
}

void suppress_device(Registry& registry, DeviceId device) {
  if (!registry.contains(device)) throw UnknownDevice(device);
  registry.suppress(device);
}

void unsuppress_device(Registry& registry, DeviceId device) {
  if (!registry.contains(device)) throw UnknownDevice(device);
  registry.unsuppress(device);
}

void suppress_apps_for(DeviceId device, const std::vector<AppSpec>& apps, AppSuppressions& supp) {
  for (const auto& a : apps) {
    if (a.suppression_enabled && a.subscriptions.count(device)) supp.suppress(a.id, device);
  }
}

void release_apps_for(DeviceId device, const std::vector<AppSpec>& apps, AppSuppressions& supp) {
  for (const auto& a : apps) supp.release(a.id, device);
}

bool add_device(HandlerContext& ctx, const DeviceSpec& spec, const StateHistory* history) {
  ctx.registry.add(spec);
  ctx.config.devices[spec.id] = default_device_config(spec);
  if (history) record_replicas(ctx.config, detect_redundant_devices(*history, ctx.registry, ctx.config.general.redundancy));
  return true;
}

bool remove_device(HandlerContext& ctx, DeviceId id) {
  if (!ctx.registry.contains(id)) throw UnknownDevice(id);
  ctx.registry.remove(id);
  ctx.config.devices.erase(id);
  for (auto& [other, dc] : ctx.config.devices) std::erase(dc.replicas, id);
  return true;
}

bool update_device_config(HandlerContext& ctx, DeviceId id, const DeviceConfig& options) {
  if (!ctx.registry.contains(id)) throw UnknownDevice(id);
  ConfigFile next = ctx.config;
  next.devices[id] = options;
  validate(next, &ctx.registry);
  ctx.config = std::move(next);
  return true;
}

bool update_app_config(HandlerContext& ctx, AppId id, const AppConfig& options) {
  auto it = std::find_if(ctx.apps.begin(), ctx.apps.end(), [&](const AppSpec& a) { return a.id == id; });
  if (it == ctx.apps.end()) throw ValidationError("apps." + std::to_string(to_int(id)), "unknown app");
  ctx.config.apps[id] = options;
  it->suppression_enabled = options.suppression_enabled;
  return true;
}

namespace {

// Per-state change rate: changes out of each state over time spent in it.
std::map<Value, double> change_rates(const std::vector<Value>& s, std::size_t from) {
  std::map<Value, std::pair<double, double>> acc;
  for (std::size_t i = from; i + 1 < s.size(); ++i) {
    auto& [dwell, changes] = acc[s[i]];
    dwell += 1;
    if (s[i + 1] != s[i]) changes += 1;
  }
  std::map<Value, double> out;
  for (const auto& [v, dc] : acc) out[v] = dc.second / dc.first;
  return out;
}

}  // namespace

StreamStats compare_streams(const std::vector<Value>& a, const std::vector<Value>& b, Tick window) {
  StreamStats st;
  const std::size_t n = std::min(a.size(), b.size());
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(window));
  if (w == 0) return st;
  const std::size_t from = n - w;
  std::size_t same = 0;
  for (std::size_t i = from; i < n; ++i) same += a[i] == b[i];
  st.agreement = static_cast<double>(same) / static_cast<double>(w);
  const auto ra = change_rates(std::vector<Value>(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n)), from);
  const auto rb = change_rates(std::vector<Value>(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n)), from);
  st.rate_gap = 0.0;
  for (const auto& [v, r] : ra) {
    auto it = rb.find(v);
    st.rate_gap = std::max(st.rate_gap, it == rb.end() ? 1.0 : std::fabs(r - it->second));
  }
  for (const auto& [v, r] : rb) {
    if (!ra.count(v)) st.rate_gap = 1.0;
  }
  return st;
}

std::vector<std::pair<DeviceId, DeviceId>> detect_redundant_devices(const StateHistory& history,
                                                                    const Registry& registry,
                                                                    const RedundancyDetectionConfig& cfg) {
  std::vector<DeviceId> candidates;
  for (auto id : registry.sensor_ids()) {
    auto it = history.find(id);
    if (it != history.end() && it->second.size() >= static_cast<std::size_t>(cfg.window)) candidates.push_back(id);
  }
  std::vector<std::pair<DeviceId, DeviceId>> pairs;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const auto a = candidates[i], b = candidates[j];
      if (registry.spec(a).type_class != registry.spec(b).type_class) continue;
      const auto st = compare_streams(history.at(a), history.at(b), cfg.window);
      if (st.agreement >= cfg.agreement && st.rate_gap < cfg.transition_tolerance) {
        pairs.emplace_back(a, b);
        pairs.emplace_back(b, a);
      }
    }
  }
  return pairs;
}

void record_replicas(ConfigFile& config, const std::vector<std::pair<DeviceId, DeviceId>>& pairs) {
  for (const auto& [a, b] : pairs) {
    auto& reps = config.devices[a].replicas;
    if (std::find(reps.begin(), reps.end(), b) == reps.end()) reps.push_back(b);
  }
}

}  // namespace hearth
