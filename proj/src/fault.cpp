#include "hearth/fault.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hearth/registry.hpp"

namespace hearth {
namespace {

std::string trim(std::string s) {
  const auto ws = " \t\r\n()";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  return out;
}

template <typename T>
T parse_number(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_integral_v<T>) {
      v = static_cast<T>(std::stoll(s, &used));
    } else {
      v = static_cast<T>(std::stod(s, &used));
    }
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
  }
}

struct Row {
  int line;
  Tick tick;
  DeviceId device;
  bool removal;
  FaultKind kind;
  Fixability fixability;
  Value param;
};

}  // namespace

std::vector<FaultSpec> parse_fault_schedule_text(const std::string& text, const Registry& registry) {
  std::vector<Row> rows;
  std::stringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("tick", 0) == 0) continue;
    const auto f = split_fields(line);
    Row r{};
    r.line = line_no;
    if (f.size() != 4 && f.size() != 5)
      throw ParseError(line_no, "expected 5 fields (tick,device,kind,fixability,value)");
    r.tick = parse_number<Tick>(f[0], line_no, "tick");
    if (r.tick < 0) throw ParseError(line_no, "negative tick");
    r.device = DeviceId{parse_number<std::int32_t>(f[1], line_no, "device id")};
    if (!registry.contains(r.device)) throw UnknownDevice(r.device);
    const auto& spec = registry.spec(r.device);

    std::string kind_field, fix_field, value_field;
    if (f.size() == 5) {
      kind_field = f[2];
      fix_field = f[3];
      value_field = f[4];
    } else {
      // Legacy tuple: the third field is the fixability or NO_FAULT.
      kind_field = f[2] == "NO_FAULT" ? "NO_FAULT" : "STUCK_AT";
      fix_field = f[2] == "NO_FAULT" ? "-" : f[2];
      value_field = f[3];
    }
    r.param = parse_number<double>(value_field, line_no, "value");
    if (kind_field == "NO_FAULT") {
      r.removal = true;
    } else {
      const auto kind = fault_kind_from(kind_field);
      if (!kind) throw ParseError(line_no, "unknown fault kind '" + kind_field + "'");
      const auto fix = fixability_from(fix_field);
      if (!fix) throw ParseError(line_no, "unknown fixability '" + fix_field + "'");
      r.kind = *kind;
      r.fixability = *fix;
      if ((r.kind == FaultKind::StuckAt || r.kind == FaultKind::Outlier) && !spec.domain.contains(r.param))
        throw ParseError(line_no, "fault value outside the device's value domain");
    }
    rows.push_back(r);
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.tick < b.tick; });

  std::vector<FaultSpec> out;
  for (const auto& r : rows) {
    if (!r.removal) {
      out.push_back(FaultSpec{r.tick, r.device, r.kind, r.fixability, r.param, std::nullopt});
      continue;
    }
    auto open = std::find_if(out.rbegin(), out.rend(), [&](const FaultSpec& s) {
      return s.device == r.device && !s.end_tick && s.start_tick < r.tick;
    });
    if (open == out.rend()) throw DanglingRemoval(r.line, r.device);
    open->end_tick = r.tick;
  }
  return out;
}

std::vector<FaultSpec> parse_fault_schedule(const std::filesystem::path& path, const Registry& registry) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fault schedule " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fault_schedule_text(ss.str(), registry);
}

std::string format_fault_schedule(const std::vector<FaultSpec>& schedule) {
  struct Line {
    Tick tick;
    int order;
    std::string text;
  };
  std::vector<Line> lines;
  auto value_text = [](Value v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& s = schedule[i];
    std::ostringstream os;
    os << s.start_tick << ',' << to_int(s.device) << ',' << to_string(s.kind) << ','
       << to_string(s.fixability) << ',' << value_text(s.param);
    lines.push_back({s.start_tick, 1, os.str()});
    if (s.end_tick) {
      std::ostringstream rm;
      rm << *s.end_tick << ',' << to_int(s.device) << ",NO_FAULT,-,0";
      lines.push_back({*s.end_tick, 0, rm.str()});
    }
  }
  // Removals sort ahead of injections on the same tick so a device can be
  // re-faulted the tick its previous fault ends.
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });
  std::string out = "tick,device_id,kind,fixability,value\n";
  for (const auto& l : lines) out += l.text + "\n";
  return out;
}

void write_fault_schedule(const std::filesystem::path& path, const std::vector<FaultSpec>& schedule) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write fault schedule " + path.string());
  out << format_fault_schedule(schedule);
}

FaultTable apply_faults(const std::vector<FaultSpec>& schedule, Tick tick, FaultTable active) {
  for (FaultId id = 0; id < schedule.size(); ++id) {
    const auto& s = schedule[id];
    if (s.end_tick && *s.end_tick == tick) {
      auto it = active.find(s.device);
      if (it != active.end() && it->second.id == id) active.erase(it);
    }
  }
  for (FaultId id = 0; id < schedule.size(); ++id) {
    const auto& s = schedule[id];
    if (s.start_tick == tick) active[s.device] = ActiveFault{id, s, tick};
  }
  return active;
}

std::optional<Value> transform_reading(Value true_value, const ActiveFault& fault, Tick tick,
                                       const ValueDomain& domain, const TransformParams& params) {
  const Tick offset = tick - fault.activated_tick;
  const auto& s = fault.spec;
  auto high_variance = [&]() -> Value {
    if (domain.is_binary()) {
      return offset % 2 == 0 ? 1.0 - domain.clamp(true_value) : domain.clamp(true_value);
    }
    const double amp = s.param != 0.0 ? std::abs(s.param) : params.high_variance_amplitude;
    return domain.clamp(offset % 2 == 0 ? true_value + amp : true_value - amp);
  };
  switch (s.kind) {
    case FaultKind::Power:
    case FaultKind::Communication:
    case FaultKind::CriticalError:
      return std::nullopt;
    case FaultKind::StuckAt:
      return domain.clamp(s.param);
    case FaultKind::Outlier:
      return offset == 0 ? domain.clamp(s.param) : domain.clamp(true_value);
    case FaultKind::HighVariance:
      return high_variance();
    case FaultKind::Spike: {
      if (domain.is_binary()) return high_variance();
      const Tick rise = std::max<Tick>(1, params.spike_rise_ticks);
      const Tick phase = offset % (2 * rise);
      const double tri = phase < rise ? static_cast<double>(phase + 1) / rise
                                      : static_cast<double>(2 * rise - 1 - phase) / rise;
      return domain.clamp(true_value + s.param * tri);
    }
  }
  return true_value;
}

std::vector<FaultReport> PerfectOracle::identify(const FaultTable& active, Tick tick) {
  live_ = &active;
  // Close intervals for faults that left the table (expired or repaired).
  for (auto it = tracked_.begin(); it != tracked_.end();) {
    auto a = active.find(it->second.spec.device);
    if (a == active.end() || a->second.id != it->first) {
      auto open = open_interval_.find(it->first);
      if (open != open_interval_.end()) {
        intervals_[open->second].end = tick;
        open_interval_.erase(open);
      }
      it = tracked_.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& [device, fault] : active) {
    if (!tracked_.count(fault.id)) {
      tracked_.emplace(fault.id, fault);
      open_interval_[fault.id] = intervals_.size();
      intervals_.push_back({fault.activated_tick, std::nullopt});
    }
  }
  std::vector<FaultReport> out;
  for (const auto& [device, fault] : active) {
    if (reported_.count(fault.id)) continue;
    if (fault.activated_tick + delay_ <= tick) {
      reported_.insert(fault.id);
      out.push_back(FaultReport{device, fault.spec.kind, tick});
    }
  }
  return out;
}

bool PerfectOracle::is_faulty(DeviceId device, Tick tick) const {
  if (!live_) return false;
  auto it = live_->find(device);
  return it != live_->end() && it->second.activated_tick + delay_ <= tick;
}

bool PerfectOracle::fault_free(Tick from, Tick to) const {
  for (const auto& iv : intervals_) {
    const bool starts_before_end = iv.start <= to;
    const bool ends_after_start = !iv.end || *iv.end > from;
    if (starts_before_end && ends_after_start) return false;
  }
  return true;
}

FaultProfile FaultProfile::single() {
  FaultProfile p;
  p.name = "single";
  for (auto k : kAllFaultKinds) p.kind_weights[k] = 1.0;
  p.fixability_weights = {{Fixability::SoftFixable, 0.5}, {Fixability::HardFixable, 0.5}};
  return p;
}

FaultProfile FaultProfile::multiple() {
  FaultProfile p;
  p.name = "multiple";
  p.kind_weights = {{FaultKind::Power, 0.30},        {FaultKind::Communication, 0.25},
                    {FaultKind::CriticalError, 0.15}, {FaultKind::Outlier, 0.05},
                    {FaultKind::StuckAt, 0.10},       {FaultKind::HighVariance, 0.10},
                    {FaultKind::Spike, 0.05}};
  p.fixability_weights = {
      {Fixability::SoftFixable, 0.4}, {Fixability::HardFixable, 0.4}, {Fixability::Unfixable, 0.2}};
  p.short_fraction = 0.1;
  p.long_min = 500;
  p.long_max = 3000;
  p.gap_min = 300;
  p.gap_max = 1500;
  p.burst_min = 2;
  p.burst_max = 4;
  p.burst_spread = 60;
  return p;
}

std::vector<FaultSpec> generate_fault_schedule(std::uint64_t seed, const FaultProfile& profile,
                                               const Registry& registry, Tick ticks) {
  std::mt19937_64 rng(seed);
  std::vector<DeviceId> devices;
  for (auto id : registry.ids()) {
    if (!registry.spec(id).virtual_sink) devices.push_back(id);
  }
  if (devices.empty() || ticks <= profile.first_tick) return {};

  auto pick = [&](const auto& weights) {
    std::vector<double> w;
    std::vector<typename std::decay_t<decltype(weights)>::key_type> keys;
    for (const auto& [k, v] : weights) {
      keys.push_back(k);
      w.push_back(v);
    }
    std::discrete_distribution<std::size_t> d(w.begin(), w.end());
    return keys[d(rng)];
  };
  auto uniform = [&](Tick lo, Tick hi) { return std::uniform_int_distribution<Tick>(lo, hi)(rng); };
  auto chance = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };

  // Even device coverage: walk shuffled rounds of the device list.
  std::vector<DeviceId> order;
  std::size_t cursor_dev = 0;
  auto next_device = [&] {
    if (cursor_dev == order.size()) {
      order = devices;
      std::shuffle(order.begin(), order.end(), rng);
      cursor_dev = 0;
    }
    return order[cursor_dev++];
  };

  // Each device also walks shuffled rounds of the kinds, one copy per unit of
  // smallest weight.
  std::map<DeviceId, std::vector<FaultKind>> kind_bags;
  auto next_kind = [&](DeviceId dev) {
    auto& bag = kind_bags[dev];
    if (bag.empty()) {
      double lo = 0.0;
      for (const auto& [k, w] : profile.kind_weights) {
        if (w > 0 && (lo == 0.0 || w < lo)) lo = w;
      }
      for (const auto& [k, w] : profile.kind_weights) {
        const auto copies = lo > 0 ? std::lround(w / lo) : 0;
        for (long i = 0; i < copies; ++i) bag.push_back(k);
      }
      if (bag.empty()) return pick(profile.kind_weights);
      std::shuffle(bag.begin(), bag.end(), rng);
    }
    const auto k = bag.back();
    bag.pop_back();
    return k;
  };

  auto make_param = [&](const DeviceSpec& spec, FaultKind kind) -> Value {
    const auto& d = spec.domain;
    switch (kind) {
      case FaultKind::StuckAt:
      case FaultKind::Outlier:
        if (d.is_binary()) return static_cast<Value>(uniform(0, 1));
        return d.clamp(std::round(std::uniform_real_distribution<double>(d.min, d.max)(rng)));
      case FaultKind::Spike:
        return d.is_binary() ? 0.0 : 30.0;
      case FaultKind::HighVariance:
        return d.is_binary() ? 0.0 : 10.0;
      default:
        return 0.0;
    }
  };

  std::vector<FaultSpec> out;
  std::map<DeviceId, Tick> busy_until;
  Tick cursor = profile.first_tick;
  while (true) {
    const int burst = static_cast<int>(uniform(profile.burst_min, profile.burst_max));
    Tick burst_end = cursor;
    std::set<DeviceId> used;
    for (int b = 0; b < burst; ++b) {
      DeviceId dev = next_device();
      for (std::size_t tries = 0; used.count(dev) && tries < devices.size(); ++tries) dev = next_device();
      if (used.count(dev)) break;
      used.insert(dev);
      const Tick start = cursor + (profile.burst_spread > 0 ? uniform(0, profile.burst_spread) : 0);
      if (busy_until.count(dev) && busy_until[dev] >= start) continue;
      const Tick length = chance(profile.short_fraction) ? uniform(profile.short_min, profile.short_max)
                                                         : uniform(profile.long_min, profile.long_max);
      const Tick end = start + length;
      if (end >= ticks) continue;
      const auto kind = next_kind(dev);
      const auto& spec = registry.spec(dev);
      out.push_back(FaultSpec{start, dev, kind, pick(profile.fixability_weights), make_param(spec, kind), end});
      busy_until[dev] = end;
      burst_end = std::max(burst_end, end);
    }
    cursor = burst_end + uniform(profile.gap_min, profile.gap_max);
    if (cursor + profile.short_min >= ticks) break;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FaultSpec& a, const FaultSpec& b) { return a.start_tick < b.start_tick; });
  return out;
}

}  // namespace hearth
