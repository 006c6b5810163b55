#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hearth/sim.hpp"

namespace hearth {

namespace {

constexpr Tick kDay = 86400;
constexpr Tick kHour = 3600;
constexpr Tick kMinute = 60;

struct Interval {
  Tick from;
  Tick to;  // exclusive
};

struct DayPlan {
  Tick wake, sleep;
  std::vector<Interval> away;
};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  Tick uniform(Tick lo, Tick hi) { return std::uniform_int_distribution<Tick>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  double normal(double sd) { return std::normal_distribution<double>(0.0, sd)(rng_); }
  Tick dwell(double mean, Tick min_ticks) {
    const double x = std::exponential_distribution<double>(1.0 / mean)(rng_);
    return std::max<Tick>(min_ticks, static_cast<Tick>(std::llround(x)));
  }

 private:
  std::mt19937_64 rng_;
};

DayPlan plan_day(Gen& g, Tick base) {
  DayPlan d;
  d.wake = base + 6 * kHour + 30 * kMinute + g.uniform(0, 30 * kMinute);
  d.sleep = base + 22 * kHour + 30 * kMinute + g.uniform(0, 60 * kMinute);
  const Tick leave = base + 8 * kHour + g.uniform(0, 45 * kMinute);
  const Tick back = base + 17 * kHour + g.uniform(0, 90 * kMinute);
  if (g.chance(0.4)) {
    const Tick lunch = base + 12 * kHour + g.uniform(0, 30 * kMinute);
    const Tick lunch_end = lunch + g.uniform(30 * kMinute, 60 * kMinute);
    d.away.push_back({leave, lunch});
    d.away.push_back({lunch_end, back});
  } else {
    d.away.push_back({leave, back});
  }
  if (g.chance(0.5)) {
    const Tick out = base + 19 * kHour + g.uniform(0, 90 * kMinute);
    d.away.push_back({out, out + g.uniform(20 * kMinute, 60 * kMinute)});
  }
  return d;
}

bool inside(const std::vector<Interval>& iv, Tick t) {
  for (const auto& i : iv) {
    if (t >= i.from && t < i.to) return true;
  }
  return false;
}

// Short random episodes (cooking smoke, a drip under the sink, a door left
// open) at `rate` per tick while `allowed` holds.
template <typename Allowed>
std::vector<Value> episodes(Gen& g, Tick ticks, double rate, Tick min_len, Tick max_len, Allowed allowed) {
  std::vector<Value> out(static_cast<std::size_t>(ticks), 0.0);
  for (Tick t = 0; t < ticks; ++t) {
    if (!allowed(t) || !g.chance(rate)) continue;
    const Tick end = std::min(ticks, t + g.uniform(min_len, max_len));
    for (Tick u = t; u < end; ++u) out[static_cast<std::size_t>(u)] = 1.0;
    t = end + min_len;
  }
  return out;
}

}  // namespace

EnvironmentTrace generate_trace(std::uint64_t seed, Tick ticks) {
  if (ticks <= 0) throw ValidationError("ticks", "must be > 0");
  using namespace home;
  Gen g(seed);
  EnvironmentTrace tr;
  tr.ticks = ticks;
  tr.seed = seed;
  const auto n = static_cast<std::size_t>(ticks);

  std::vector<DayPlan> days;
  for (Tick base = 0; base < ticks; base += kDay) days.push_back(plan_day(g, base));
  auto day_of = [&](Tick t) -> const DayPlan& { return days[static_cast<std::size_t>(t / kDay)]; };
  auto home_at = [&](Tick t) { return !inside(day_of(t).away, t); };
  auto awake_at = [&](Tick t) {
    const auto& d = day_of(t);
    return t >= d.wake && t < d.sleep;
  };

  std::vector<Value> presence(n), motion(n, 0.0), temp(n);
  for (Tick t = 0; t < ticks; ++t) presence[static_cast<std::size_t>(t)] = home_at(t) ? 1.0 : 0.0;

  // Motion alternates active/idle dwell periods while someone is home; busier
  // while awake.
  for (Tick t = 0; t < ticks;) {
    if (!home_at(t)) {
      ++t;
      continue;
    }
    const bool awake = awake_at(t);
    const Tick active = g.dwell(awake ? 240.0 : 60.0, 5);
    const Tick idle = g.dwell(awake ? 45.0 : 60.0, 5);
    for (Tick u = t; u < std::min(ticks, t + active) && home_at(u); ++u) motion[static_cast<std::size_t>(u)] = 1.0;
    t += active + idle;
  }

  // Diurnal curve peaking mid-afternoon with slowly wandering noise.
  double noise = 0.0;
  for (Tick t = 0; t < ticks; ++t) {
    noise = 0.998 * noise + g.normal(0.08);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(time_of_day(t) - 9 * kHour) / kDay;
    const double raw = 74.0 + 10.0 * std::sin(phase) + noise;
    temp[static_cast<std::size_t>(t)] = std::clamp(std::round(raw * 2.0) / 2.0, 0.0, 120.0);
  }

  auto contact = episodes(g, ticks, 1.0 / 1800.0, 10, 60, [&](Tick t) { return home_at(t) && awake_at(t); });
  const auto contact_away = episodes(g, ticks, 1.0 / 10800.0, 10, 60, [&](Tick t) { return !home_at(t); });
  for (std::size_t i = 0; i < n; ++i) contact[i] = std::max(contact[i], contact_away[i]);
  auto smoke = episodes(g, ticks, 1.0 / (6.0 * kHour), 30, 180, [&](Tick t) { return home_at(t) && awake_at(t); });
  auto leak = episodes(g, ticks, 1.0 / (12.0 * kHour), 20, 120, [](Tick) { return true; });

  tr.streams[kMotion] = std::move(motion);
  tr.streams[kContact] = std::move(contact);
  tr.streams[kTemperature] = std::move(temp);
  tr.streams[kPresence] = std::move(presence);
  tr.streams[kSmoke] = smoke;
  tr.streams[kSmokeReplica] = std::move(smoke);
  tr.streams[kLeak] = std::move(leak);
  return tr;
}

void write_trace(const std::filesystem::path& path, const EnvironmentTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace " + path.string());
  out << "# seed=" << trace.seed << '\n' << "tick";
  for (const auto& [id, s] : trace.streams) out << ',' << to_int(id);
  out << '\n';
  char buf[32];
  for (Tick t = 0; t < trace.ticks; ++t) {
    out << t;
    for (const auto& [id, s] : trace.streams) {
      std::snprintf(buf, sizeof buf, "%.10g", s[static_cast<std::size_t>(t)]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

EnvironmentTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace " + path.string());
  EnvironmentTrace tr;
  std::vector<DeviceId> cols;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# seed=", 0) == 0) tr.seed = std::stoull(line.substr(7));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cols.empty()) {
      if (cells.empty() || cells[0] != "tick") throw ParseError(line_no, "expected tick header");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        cols.push_back(DeviceId{std::stoi(cells[i])});
        tr.streams[cols.back()];
      }
      continue;
    }
    if (cells.size() != cols.size() + 1) throw ParseError(line_no, "wrong column count");
    try {
      if (std::stoll(cells[0]) != tr.ticks) throw ParseError(line_no, "ticks out of order");
      for (std::size_t i = 0; i < cols.size(); ++i) tr.streams[cols[i]].push_back(std::stod(cells[i + 1]));
    } catch (const std::invalid_argument&) {
      throw ParseError(line_no, "not a number");
    }
    ++tr.ticks;
  }
  if (cols.empty()) throw ParseError(line_no, "empty trace");
  return tr;
}

}  // namespace hearth
