#include "hearth/registry.hpp"

#include <algorithm>

namespace hearth {

std::optional<Value> SystemSnapshot::value_of(DeviceId id) const {
  if (auto it = sensor_states.find(id); it != sensor_states.end()) return it->second;
  if (auto it = actuator_states.find(id); it != actuator_states.end()) return it->second;
  return std::nullopt;
}

Registry::Registry(const std::vector<DeviceSpec>& specs) {
  for (const auto& s : specs) add(s);
}

void Registry::add(DeviceSpec spec) {
  validate(spec);
  if (contains(spec.id))
    throw ValidationError("device " + std::to_string(to_int(spec.id)) + ".id", "duplicate device id");
  Slot s;
  s.truth = spec.domain.clamp(spec.domain.min);
  s.last_known = s.truth;
  const auto id = spec.id;
  s.spec = std::move(spec);
  devices_.emplace(id, std::move(s));
}

void Registry::remove(DeviceId id) {
  if (!contains(id)) throw UnknownDevice(id);
  devices_.erase(id);
  faults_.erase(id);
  suppressed_.erase(id);
  overrides_.erase(id);
  redirects_.erase(id);
  std::erase_if(redirects_, [id](const auto& kv) { return kv.second == id; });
}

Registry::Slot& Registry::slot(DeviceId id) {
  auto it = devices_.find(id);
  if (it == devices_.end()) throw UnknownDevice(id);
  return it->second;
}

const Registry::Slot& Registry::slot(DeviceId id) const {
  auto it = devices_.find(id);
  if (it == devices_.end()) throw UnknownDevice(id);
  return it->second;
}

const DeviceSpec& Registry::spec(DeviceId id) const { return slot(id).spec; }

std::vector<DeviceId> Registry::ids() const {
  std::vector<DeviceId> out;
  out.reserve(devices_.size());
  for (const auto& [id, s] : devices_) out.push_back(id);
  return out;
}

std::vector<DeviceId> Registry::sensor_ids() const {
  std::vector<DeviceId> out;
  for (const auto& [id, s] : devices_) {
    if (s.spec.is_sensor()) out.push_back(id);
  }
  return out;
}

std::vector<DeviceId> Registry::actuator_ids() const {
  std::vector<DeviceId> out;
  for (const auto& [id, s] : devices_) {
    if (s.spec.is_actuator() && !s.spec.virtual_sink) out.push_back(id);
  }
  return out;
}

void Registry::set_ground_truth(DeviceId id, Value v) {
  auto& s = slot(id);
  s.truth = s.spec.domain.clamp(v);
}

Value Registry::ground_truth(DeviceId id) const { return slot(id).truth; }

const ActiveFault* Registry::fault_on(DeviceId id) const {
  auto it = faults_.find(id);
  return it == faults_.end() ? nullptr : &it->second;
}

bool Registry::clear_fault(DeviceId id) { return faults_.erase(id) != 0; }

void Registry::suppress(DeviceId id) {
  slot(id);
  suppressed_.insert(id);
}

void Registry::unsuppress(DeviceId id) {
  slot(id);
  suppressed_.erase(id);
}

void Registry::redirect(DeviceId from, DeviceId to) {
  slot(from);
  slot(to);
  const std::string where = "redirect " + std::to_string(to_int(from));
  if (from == to) throw ValidationError(where, "device cannot redirect to itself");
  if (redirects_.count(to)) throw ValidationError(where, "target is itself redirected");
  for (const auto& [src, dst] : redirects_) {
    if (dst == from && src != from) throw ValidationError(where, "source is a redirect target");
  }
  redirects_[from] = to;
}

void Registry::clear_redirect(DeviceId from) { redirects_.erase(from); }

std::optional<DeviceId> Registry::redirect_of(DeviceId from) const {
  auto it = redirects_.find(from);
  if (it == redirects_.end()) return std::nullopt;
  return it->second;
}

void Registry::set_override(DeviceId id, Value v) {
  const auto& s = slot(id);
  overrides_[id] = s.spec.domain.clamp(v);
}

void Registry::clear_override(DeviceId id) { overrides_.erase(id); }

std::optional<Value> Registry::override_of(DeviceId id) const {
  auto it = overrides_.find(id);
  if (it == overrides_.end()) return std::nullopt;
  return it->second;
}

DeviceState Registry::observe(DeviceId id, Tick tick) {
  auto& origin = slot(id);
  DeviceState st;
  st.device = id;
  st.tick = std::max(tick, origin.last_tick);
  origin.last_tick = st.tick;

  if (auto ov = override_of(id)) {
    st.value = *ov;
    st.health = Health::Ok;
    return st;
  }

  const DeviceId target = redirect_of(id).value_or(id);
  auto& s = slot(target);
  auto fit = faults_.find(target);
  if (fit == faults_.end()) {
    st.value = s.truth;
    s.last_known = st.value;
    return st;
  }
  const auto observed = transform_reading(s.truth, fit->second, tick, s.spec.domain, transform_);
  st.fault = fit->second.spec.kind;
  if (!observed) {
    st.value = s.last_known;
    st.health = Health::Unresponsive;
    return st;
  }
  st.value = *observed;
  st.health = Health::Faulty;
  s.last_known = st.value;
  return st;
}

DeviceState Registry::read_device(DeviceId id, Tick tick) {
  auto st = observe(id, tick);
  if (is_suppressed(id)) st.health = Health::Suppressed;
  return st;
}

ActuationResult Registry::actuate(DeviceId id, Value value, Tick tick) {
  const auto& origin = slot(id);
  if (!origin.spec.is_actuator()) throw NotActuator(id);
  if (!origin.spec.domain.contains(value))
    throw ValidationError("actuate " + std::to_string(to_int(id)), "value outside domain");
  (void)tick;
  if (is_suppressed(id)) {
    ++rejected_actuations_;
    return ActuationResult::SuppressedDevice;
  }
  const DeviceId target = redirect_of(id).value_or(id);
  auto& s = slot(target);
  if (is_suppressed(target)) {
    ++rejected_actuations_;
    return ActuationResult::SuppressedDevice;
  }
  if (auto fit = faults_.find(target); fit != faults_.end()) {
    const auto kind = fit->second.spec.kind;
    if (is_fail_stop(kind)) {
      ++rejected_actuations_;
      return ActuationResult::Unresponsive;
    }
    // The setpoint latches; it takes effect once the fault clears.
    s.truth = value;
    ++accepted_actuations_;
    return kind == FaultKind::StuckAt ? ActuationResult::NoEffect : ActuationResult::Ok;
  }
  s.truth = value;
  ++accepted_actuations_;
  return ActuationResult::Ok;
}

SystemSnapshot Registry::snapshot(Tick tick) {
  SystemSnapshot snap;
  snap.tick = tick;
  for (auto& [id, s] : devices_) {
    if (s.spec.virtual_sink) continue;
    const auto st = observe(id, tick);
    (s.spec.is_sensor() ? snap.sensor_states : snap.actuator_states)[id] = st.value;
  }
  return snap;
}

}  // namespace hearth
