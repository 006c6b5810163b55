#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hearth/device.hpp"
#include "hearth/types.hpp"

namespace hearth {

class Registry;

// Index of a fault within its schedule.
using FaultId = std::size_t;

struct FaultSpec {
  Tick start_tick = 0;
  DeviceId device{};
  FaultKind kind = FaultKind::StuckAt;
  Fixability fixability = Fixability::Unfixable;
  // Stuck value, outlier value, or spike/variance amplitude.
  Value param = 0.0;
  std::optional<Tick> end_tick;

  bool operator==(const FaultSpec&) const = default;
};

struct ActiveFault {
  FaultId id = 0;
  FaultSpec spec;
  Tick activated_tick = 0;
};

// At most one active fault per device.
using FaultTable = std::map<DeviceId, ActiveFault>;

class DanglingRemoval : public ParseError {
 public:
  DanglingRemoval(int line_no, DeviceId device)
      : ParseError(line_no, "NO_FAULT for device " + std::to_string(to_int(device)) +
                                " without an open fault") {}
};

// Schedule CSV: `tick,device_id,kind,fixability,value`. A `NO_FAULT` row
// closes the most recent open fault on that device. The older 4-field form
// `(tick, device, fixability|NO_FAULT, value)` is accepted and read as a
// stuck-at fault. Blank lines, `#` comments and a `tick,...` header are
// skipped. Result is sorted by start tick.
std::vector<FaultSpec> parse_fault_schedule(const std::filesystem::path& path, const Registry& registry);
std::vector<FaultSpec> parse_fault_schedule_text(const std::string& text, const Registry& registry);

std::string format_fault_schedule(const std::vector<FaultSpec>& schedule);
void write_fault_schedule(const std::filesystem::path& path, const std::vector<FaultSpec>& schedule);

// Advances the active table to `tick`: faults ending at `tick` are dropped,
// faults starting at `tick` are installed (a later start replaces an earlier
// fault on the same device).
FaultTable apply_faults(const std::vector<FaultSpec>& schedule, Tick tick, FaultTable active);

struct TransformParams {
  Tick spike_rise_ticks = 10;
  double high_variance_amplitude = 10.0;  // numeric devices, when param is 0
};

// Observed value for a device carrying `fault`, or nullopt when the device is
// unresponsive. Pure in (true_value, fault, tick - activation).
std::optional<Value> transform_reading(Value true_value, const ActiveFault& fault, Tick tick,
                                       const ValueDomain& domain, const TransformParams& params = {});

struct FaultReport {
  DeviceId device{};
  std::optional<FaultKind> kind;
  Tick detected_tick = 0;

  bool operator==(const FaultReport&) const = default;
};

// Anything that turns the device stream into fault reports plugs in here.
class FaultIdentifier {
 public:
  virtual ~FaultIdentifier() = default;

  // Called once per tick, after faults are applied. Returns new reports.
  virtual std::vector<FaultReport> identify(const FaultTable& active, Tick tick) = 0;

  // Whether the identifier currently flags `device` as faulty.
  virtual bool is_faulty(DeviceId device, Tick tick) const = 0;

  // Certifies that no device carried a fault anywhere in [from, to].
  virtual bool fault_free(Tick from, Tick to) const = 0;

  // Upper bound on the delay between fault onset and its report.
  virtual Tick upper_bound() const = 0;
};

// Reports every fault exactly `delay` ticks after it activates, with its true
// kind.
class PerfectOracle final : public FaultIdentifier {
 public:
  explicit PerfectOracle(Tick delay = 0) : delay_(delay) {}

  std::vector<FaultReport> identify(const FaultTable& active, Tick tick) override;
  bool is_faulty(DeviceId device, Tick tick) const override;
  bool fault_free(Tick from, Tick to) const override;
  Tick upper_bound() const override { return delay_; }

 private:
  struct Interval {
    Tick start;
    std::optional<Tick> end;  // exclusive
  };

  Tick delay_;
  const FaultTable* live_ = nullptr;
  std::map<FaultId, ActiveFault> tracked_;
  std::set<FaultId> reported_;
  std::vector<Interval> intervals_;
  std::map<FaultId, std::size_t> open_interval_;
};

// Random schedule generation parameters. `single` keeps one fault active at a
// time; `multiple` injects overlapping bursts, mostly fail-stop.
struct FaultProfile {
  std::string name = "single";
  std::map<FaultKind, double> kind_weights;
  std::map<Fixability, double> fixability_weights;
  double short_fraction = 0.25;
  Tick short_min = 10, short_max = 60;
  Tick long_min = 300, long_max = 2000;
  Tick gap_min = 100, gap_max = 600;
  int burst_min = 1, burst_max = 1;
  Tick burst_spread = 0;
  Tick first_tick = 600;

  static FaultProfile single();
  static FaultProfile multiple();
};

std::vector<FaultSpec> generate_fault_schedule(std::uint64_t seed, const FaultProfile& profile,
                                               const Registry& registry, Tick ticks);

}  // namespace hearth
