#include <cmath>
#include <fstream>
#include <sstream>

#include "hearth/sim.hpp"
#include "json.hpp"

namespace hearth {

using nlohmann::json;

CostModel parse_cost_model(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("cost_model", e.what());
  }
  if (!j.is_object()) throw ValidationError("cost_model", "expected object");
  CostModel m;
  const std::map<std::string, double*> reals{{"cpu_op_ms", &m.cpu_op_ms},
                                             {"device_command_ms", &m.device_command_ms},
                                             {"actuation_duration_ms", &m.actuation_duration_ms},
                                             {"transient_max_ms", &m.transient_max_ms},
                                             {"retry_timeout_ms", &m.retry_timeout_ms},
                                             {"identification_bound_ms", &m.identification_bound_ms}};
  for (const auto& [k, v] : j.items()) {
    if (k == "restart_attempts") {
      if (!v.is_number_integer() || v.get<int>() < 1) throw ValidationError("cost_model.restart_attempts", "must be >= 1");
      m.restart_attempts = v.get<int>();
      continue;
    }
    auto it = reals.find(k);
    if (it == reals.end()) throw ValidationError("cost_model." + k, "unknown field");
    if (!v.is_number() || v.get<double>() < 0) throw ValidationError("cost_model." + k, "must be a number >= 0");
    *it->second = v.get<double>();
  }
  return m;
}

CostModel load_cost_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cost model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cost_model(ss.str());
}

std::string cost_model_to_json(const CostModel& m) {
  return json{{"cpu_op_ms", m.cpu_op_ms},
              {"device_command_ms", m.device_command_ms},
              {"actuation_duration_ms", m.actuation_duration_ms},
              {"transient_max_ms", m.transient_max_ms},
              {"retry_timeout_ms", m.retry_timeout_ms},
              {"identification_bound_ms", m.identification_bound_ms},
              {"restart_attempts", m.restart_attempts}}
      .dump(2);
}

const LatencyStat* LatencyTables::function(const std::string& name) const {
  for (const auto& f : functions) {
    if (f.function == name) return &f;
  }
  return nullptr;
}

namespace {

LatencyStat summarize(std::string name, const std::vector<double>& xs) {
  LatencyStat s;
  s.function = std::move(name);
  s.samples = xs.size();
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean_ms = sum / static_cast<double>(xs.size());
  double sq = 0;
  for (double x : xs) sq += (x - s.mean_ms) * (x - s.mean_ms);
  s.stddev_ms = std::sqrt(sq / static_cast<double>(xs.size()));
  return s;
}

bool silent(FaultKind k) { return k == FaultKind::Power || k == FaultKind::Communication; }

// Operation-count model of each handling function.
struct Costs {
  const CostModel& m;
  std::size_t devices;
  std::size_t sensors;

  double checkpoint() const { return m.cpu_op_ms * (4.0 * static_cast<double>(devices) + 10.0); }
  double replicate(std::size_t replicas) const { return m.cpu_op_ms * (8.0 + 4.0 * static_cast<double>(replicas)); }
  double retry_transient(double clears_after_ms, int polls) const {
    return clears_after_ms + polls * m.device_command_ms;
  }
  double retry_permanent(FaultKind k) const {
    return m.retry_timeout_ms + (is_fail_stop(k) ? 0.0 : m.identification_bound_ms);
  }
  double restart(const DeviceSpec& d, bool hard, FaultKind k) const {
    if (silent(k)) return m.restart_attempts * m.device_command_ms;
    return m.device_command_ms + (hard ? d.hard_restart_ms : d.soft_restart_ms) +
           (is_fail_stop(k) ? 0.0 : m.identification_bound_ms);
  }
  double rollback(std::size_t entries, std::size_t actuations) const {
    return m.cpu_op_ms * (2.0 * static_cast<double>(entries * sensors) + 20.0) +
           static_cast<double>(actuations) * m.device_command_ms;
  }
  double notify(std::size_t records) const {
    return static_cast<double>(records) * (m.device_command_ms + 20.0 * m.cpu_op_ms);
  }
};

}  // namespace

LatencyTables compute_latencies(const CostModel& cost, const std::vector<DeviceSpec>& catalog,
                                const std::vector<Scheme>& schemes, const ConfigFile* config) {
  std::vector<const DeviceSpec*> devices;
  std::size_t sensors = 0;
  for (const auto& d : catalog) {
    if (d.virtual_sink) continue;
    devices.push_back(&d);
    sensors += d.is_sensor() ? 1 : 0;
  }
  const Costs c{cost, devices.size(), sensors};
  ConfigFile fallback;
  if (!config) {
    Registry reg(catalog);
    fallback = default_home_config(reg, builtin_apps());
    config = &fallback;
  }
  auto replicas_of = [&](const DeviceSpec& d) {
    auto it = config->devices.find(d.id);
    return it == config->devices.end() ? std::size_t{0} : it->second.replicas.size();
  };

  std::vector<double> checkpoint, replicate, retry, soft, hard, rb, notify;
  const int polls = 3;
  for (const DeviceSpec* d : devices) {
    checkpoint.push_back(c.checkpoint());
    replicate.push_back(c.replicate(replicas_of(*d)));
    for (auto k : kAllFaultKinds) {
      // Transient and permanent cases weigh the same.
      std::vector<double> transient;
      for (double ms = 100; ms < cost.transient_max_ms; ms += 100) transient.push_back(c.retry_transient(ms, polls));
      retry.push_back(summarize("", transient).mean_ms);
      retry.push_back(c.retry_permanent(k));
      if (d->supports_soft_restart) soft.push_back(c.restart(*d, false, k));
      if (d->supports_hard_restart) hard.push_back(c.restart(*d, true, k));
    }
  }
  for (std::size_t n = 1; n <= 20; ++n) {
    for (std::size_t a = 0; a <= 3; ++a) rb.push_back(c.rollback(n, a));
  }
  for (std::size_t r = 1; r <= 3; ++r) notify.push_back(c.notify(r));

  LatencyTables out;
  out.functions = {summarize("checkpoint", checkpoint),    summarize("replicate", replicate),
                   summarize("retry", retry),              summarize("software_restart", soft),
                   summarize("hardware_restart", hard),    summarize("rollback", rb),
                   summarize("notify", notify)};
  const double rollback_mean = out.function("rollback")->mean_ms;

  for (const auto& s : schemes) {
    double reach_rollback = 0;
    std::size_t cases_all = 0;
    for (auto k : kAllFaultKinds) {
      double total = 0;
      double repaired = 0;
      std::size_t cases = 0;
      for (const DeviceSpec* d : devices) {
        for (auto fix : {Fixability::SoftFixable, Fixability::HardFixable}) {
          double t = 0;
          bool done = false;
          for (auto step : s.steps) {
            if (done) break;
            switch (step) {
              case Step::Replicate:
                t += c.replicate(replicas_of(*d));
                done = replicas_of(*d) > 0;
                break;
              case Step::Retry:
                t += c.retry_permanent(k);
                break;
              case Step::SoftRestart:
              case Step::HardRestart: {
                const bool is_hard = step == Step::HardRestart;
                if (!(is_hard ? d->supports_hard_restart : d->supports_soft_restart)) break;
                t += c.restart(*d, is_hard, k);
                done = !silent(k) && fix == (is_hard ? Fixability::HardFixable : Fixability::SoftFixable);
                break;
              }
              case Step::Rollback:
                reach_rollback += 1;
                break;
              case Step::Notify:
                t += c.notify(1);
                break;
            }
          }
          total += t;
          repaired += done ? 1 : 0;
          ++cases;
        }
      }
      cases_all += cases;
      out.handle_times.push_back({s.name, k, total / static_cast<double>(cases),
                                  repaired / static_cast<double>(cases), silent(k)});
    }
    out.rollback_ms_by_scheme[s.name] = rollback_mean * reach_rollback / static_cast<double>(cases_all);
  }
  return out;
}

}  // namespace hearth
