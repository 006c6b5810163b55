#pragma once

// Randomized rollback runs against the brute-force oracle. Shared by the unit
// tests and the acceptance binary.

#include "hearth/checkpoint.hpp"
#include "hearth/registry.hpp"
#include "oracle.hpp"

namespace trials {

struct Tally {
  std::size_t runs = 0;
  std::size_t selection_mismatches = 0;
  std::size_t outcome_mismatches = 0;
  std::size_t partial_rollbacks = 0;   // failure with some actuation issued
  std::size_t unscoped_overrides = 0;  // override written on a healthy sensor
  std::size_t wrong_final_state = 0;   // success without reaching the target
};

inline Tally run(std::uint64_t seed, std::size_t logs) {
  using namespace hearth;
  const DeviceId motion{1}, contact{2}, temp{3}, lock{8}, light{10}, window{15};
  const std::vector<DeviceId> bin_sensors{motion, contact}, actuators{lock, light, window};
  std::vector<DeviceSpec> cat{spec_for_class(motion, "motion", TypeClass::S1),
                              spec_for_class(contact, "contact", TypeClass::S2),
                              spec_for_class(temp, "temperature", TypeClass::S3),
                              spec_for_class(lock, "lock", TypeClass::A1),
                              spec_for_class(light, "light", TypeClass::A1),
                              spec_for_class(window, "window", TypeClass::A2)};
  const std::map<DeviceId, double> tol{{temp, 2.0}};
  MatchRules rules;
  rules.tolerance = tol;

  std::mt19937_64 rng(seed);
  Tally tally;
  const RollbackStrategy strategies[] = {RollbackStrategy::MostRecent, RollbackStrategy::FailNorm,
                                         RollbackStrategy::FailSafe};
  for (std::size_t n = 0; n < logs; ++n) {
    CheckpointLog log;
    log.entries() = oracle::random_log(rng, bin_sensors, temp, actuators, 10);
    std::map<DeviceId, Value> sensors{{motion, static_cast<Value>(rng() % 2)},
                                      {contact, static_cast<Value>(rng() % 2)},
                                      {temp, 66.0 + static_cast<Value>(rng() % 13)}};
    std::map<DeviceId, Value> acts;
    for (auto a : actuators) acts[a] = static_cast<Value>(rng() % 2);
    std::set<DeviceId> faulty;
    for (auto id : {motion, contact, temp, lock, light, window}) {
      if (rng() % 4 == 0) faulty.insert(id);
    }
    std::map<DeviceId, Value> fail_safe;
    if (rng() % 2) fail_safe[lock] = 1;
    if (rng() % 2) fail_safe[window] = 0;

    for (auto strategy : strategies) {
      Registry reg(cat);
      for (const auto& [id, v] : sensors) reg.set_ground_truth(id, v);
      for (const auto& [id, v] : acts) reg.actuate(id, v, 0);
      FaultId fid = 0;
      for (auto id : faulty) {
        // Faulty devices read stuck at their current value; sensors are
        // excluded from matching either way.
        const Value stuck = reg.observe(id, 0).value;
        reg.faults()[id] = ActiveFault{fid++, {0, id, FaultKind::StuckAt, Fixability::Unfixable, stuck, std::nullopt}, 0};
      }
      std::map<DeviceId, Value> current;
      for (const auto& [id, v] : sensors) {
        if (!faulty.count(id)) current[id] = v;
      }

      const auto expect = oracle::select(log.entries(), strategy, current, faulty, fail_safe, tol);
      bool expect_blocked = false;
      if (expect) {
        for (const auto& [id, v] : log.entries()[*expect].actuator_states)
          expect_blocked = expect_blocked || (acts.at(id) != v && faulty.count(id));
      }

      RollbackSettings settings{strategy, rules, fail_safe};
      const auto before = reg.snapshot(0);
      const auto accepted = reg.accepted_actuations();
      const auto result = rollback(log, reg, settings, faulty, 1);
      ++tally.runs;

      if (result.selected != expect) ++tally.selection_mismatches;
      const bool expect_success = expect && !expect_blocked;
      if (result.success != expect_success) ++tally.outcome_mismatches;
      if (!expect) {
        if (result.failure != RollbackFailure::NoCheckpoint) ++tally.outcome_mismatches;
      } else if (expect_blocked && result.failure != RollbackFailure::FaultyActuator) {
        ++tally.outcome_mismatches;
      }

      if (!result.success) {
        if (reg.accepted_actuations() != accepted || !(reg.snapshot(0) == before)) ++tally.partial_rollbacks;
        for (auto id : reg.sensor_ids()) {
          if (reg.override_of(id)) ++tally.partial_rollbacks;
        }
        continue;
      }
      const auto& target = log.entries()[*result.selected];
      for (const auto& [id, v] : target.actuator_states) {
        if (reg.commanded(id) != v) ++tally.wrong_final_state;
      }
      for (auto id : reg.sensor_ids()) {
        const bool written = reg.override_of(id).has_value();
        if (written && !faulty.count(id)) ++tally.unscoped_overrides;
        if (faulty.count(id) && (!written || *reg.override_of(id) != target.sensor_states.at(id)))
          ++tally.wrong_final_state;
      }
    }
  }
  return tally;
}

}  // namespace trials
