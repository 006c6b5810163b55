#include <random>
#include <sstream>

#include "doctest.h"
#include "rig.hpp"

using namespace hearth;
using namespace hearth::home;

namespace {

FaultSpec fault(Tick start, DeviceId d, FaultKind k, Fixability f, Value param = 0,
                std::optional<Tick> end = std::nullopt) {
  return FaultSpec{start, d, k, f, param, end};
}

template <typename Task>
auto run_task(Rig& rig, Task& task, Tick from, Tick limit) {
  for (Tick t = from; t < limit; ++t) {
    rig.at(t);
    if (auto out = task.advance(rig.ctx)) return std::make_pair(*out, t);
  }
  FAIL("task did not finish");
  return std::make_pair(decltype(*task.advance(rig.ctx)){}, Tick{-1});
}

}  // namespace

TEST_CASE("replicate redirects to the first healthy replica") {
  Rig rig;
  rig.at(0);
  CHECK(activate_redundant_device(rig.ctx, kSmoke));
  CHECK(rig.reg.redirect_of(kSmoke) == kSmokeReplica);
  CHECK_FALSE(activate_redundant_device(rig.ctx, kContact));

  Rig two;
  const DeviceId extra{30};
  two.reg.add(spec_for_class(extra, "smoke_3", TypeClass::S5));
  two.config.devices[extra] = default_device_config(two.reg.spec(extra));
  two.config.device(kSmoke).replicas = {kSmokeReplica, extra};
  two.schedule = {fault(0, kSmokeReplica, FaultKind::Power, Fixability::Unfixable)};
  two.at(0);
  CHECK(activate_redundant_device(two.ctx, kSmoke));
  CHECK(two.reg.redirect_of(kSmoke) == extra);
}

TEST_CASE("retry resolves K polls after a transient fault ends") {
  Rig rig;
  rig.config.device(kMotion).retry_max = 60;
  // Last faulty tick is 120.
  rig.schedule = {fault(100, kMotion, FaultKind::StuckAt, Fixability::Unfixable, 1, 121)};
  rig.reg.set_ground_truth(kMotion, 0);
  RetryTask task(kMotion, RetryArgs{{}, {0.0}, std::nullopt}, 100);
  const auto [out, when] = run_task(rig, task, 100, 200);
  CHECK(out == RetryOutcome::Resolved);
  CHECK(when == 123);
}

TEST_CASE("retry with a verify function") {
  Rig rig;
  rig.schedule = {fault(10, kContact, FaultKind::StuckAt, Fixability::Unfixable, 1, 20)};
  const FaultIdentifier& id = rig.oracle;
  RetryTask task(kContact, RetryArgs{[&id](DeviceId d, Tick t) { return !id.is_faulty(d, t); }, {}, false}, 10);
  const auto [out, when] = run_task(rig, task, 10, 100);
  CHECK(out == RetryOutcome::Resolved);
  CHECK(when == 20);
}

TEST_CASE("retry times out on a permanent fail-stop fault") {
  Rig rig;
  rig.schedule = {fault(0, kContact, FaultKind::Power, Fixability::Unfixable)};
  RetryTask task(kContact, RetryArgs{{}, {}, true}, 0);
  const auto [out, when] = run_task(rig, task, 0, 100);
  CHECK(out == RetryOutcome::TimedOut);
  CHECK(when == rig.config.device(kContact).retry_max);
}

TEST_CASE("pure-delay retry lifts suppression then confirms") {
  Rig rig;
  for (auto& a : rig.apps) a.suppression_enabled = true;
  rig.schedule = {fault(0, kPresence, FaultKind::StuckAt, Fixability::Unfixable, 1)};
  rig.reg.suppress(kPresence);
  suppress_apps_for(kPresence, rig.apps, rig.supp);
  RetryTask persistent(kPresence, RetryArgs{}, 0);
  auto [out, when] = run_task(rig, persistent, 0, 100);
  CHECK(out == RetryOutcome::StillFaulty);
  CHECK(when == 30);
  CHECK(rig.reg.is_suppressed(kPresence));
  CHECK(rig.supp.is_suppressed(AppId{8}));

  Rig clears;
  clears.schedule = {fault(0, kPresence, FaultKind::StuckAt, Fixability::Unfixable, 1, 10)};
  clears.reg.suppress(kPresence);
  RetryTask transient(kPresence, RetryArgs{}, 0);
  std::tie(out, when) = run_task(clears, transient, 0, 100);
  CHECK(out == RetryOutcome::Resolved);
  CHECK(when == 30 + clears.config.general.identification_upper_bound);
  CHECK_FALSE(clears.reg.is_suppressed(kPresence));
}

TEST_CASE("property: retry never actuates") {
  std::mt19937_64 rng(4);
  for (int round = 0; round < 50; ++round) {
    Rig rig;
    for (auto a : rig.reg.actuator_ids()) {
      if (!rig.reg.spec(a).virtual_sink) rig.reg.actuate(a, static_cast<Value>(rng() % 2), 0);
    }
    std::map<DeviceId, Value> before;
    for (auto a : rig.reg.actuator_ids()) before[a] = rig.reg.commanded(a);
    const auto accepted = rig.reg.accepted_actuations();
    const auto dev = rig.reg.ids()[rng() % 17];
    const auto kind = kAllFaultKinds[rng() % 7];
    rig.schedule = {fault(0, dev, kind, Fixability::Unfixable, 1, static_cast<Tick>(rng() % 60 + 1))};
    RetryArgs args;
    if (rng() % 2) args.expected_values = {0.0, 1.0};
    if (rng() % 2) args.is_failstop = is_fail_stop(kind);
    RetryTask task(dev, args, 0);
    run_task(rig, task, 0, 200);
    CHECK(rig.reg.accepted_actuations() == accepted);
    for (auto a : rig.reg.actuator_ids()) CHECK(rig.reg.commanded(a) == before[a]);
  }
}

TEST_CASE("software restart repairs a soft-fixable fault") {
  Rig rig;
  rig.schedule = {fault(0, kContact, FaultKind::StuckAt, Fixability::SoftFixable, 1)};
  RestartTask task(kContact, RestartType::Software, FaultKind::StuckAt, 0);
  const auto [ok, when] = run_task(rig, task, 0, 100);
  CHECK(ok);
  CHECK(rig.reg.fault_on(kContact) == nullptr);
  CHECK(task.commands_sent() == 1);
  // 1000 ms restart, then the identification bound.
  CHECK(when == 1 + rig.config.general.identification_upper_bound);
}

TEST_CASE("restart of an unfixable fault fails after re-detection") {
  Rig rig;
  rig.schedule = {fault(0, kContact, FaultKind::StuckAt, Fixability::Unfixable, 1)};
  RestartTask task(kContact, RestartType::Hardware, FaultKind::StuckAt, 0);
  const auto [ok, when] = run_task(rig, task, 0, 100);
  CHECK_FALSE(ok);
  CHECK(when == 5);
  CHECK(rig.reg.fault_on(kContact) != nullptr);
}

TEST_CASE("restart without device support sends nothing") {
  Rig rig;
  auto spec = rig.reg.spec(kContact);
  rig.reg.remove(kContact);
  spec.supports_hard_restart = false;
  rig.reg.add(spec);
  rig.schedule = {fault(0, kContact, FaultKind::StuckAt, Fixability::HardFixable, 1)};
  RestartTask task(kContact, RestartType::Hardware, FaultKind::StuckAt, 0);
  const auto [ok, when] = run_task(rig, task, 0, 10);
  CHECK_FALSE(ok);
  CHECK(when == 0);
  CHECK(task.commands_sent() == 0);
  CHECK(rig.ctx.counters.restart_commands == 0);
}

TEST_CASE("property: restart commands stay within the attempt bound") {
  for (auto kind : kAllFaultKinds) {
    for (auto fix : {Fixability::SoftFixable, Fixability::HardFixable, Fixability::Unfixable}) {
      for (auto type : {RestartType::Software, RestartType::Hardware}) {
        Rig rig;
        rig.config.device(kAlarm).restart_attempts = 4;
        rig.schedule = {fault(0, kAlarm, kind, fix, 1)};
        RestartTask task(kAlarm, type, kind, 0);
        run_task(rig, task, 0, 200);
        CHECK(task.commands_sent() <= 4);
        if (kind == FaultKind::Power || kind == FaultKind::Communication) CHECK(task.commands_sent() == 4);
      }
    }
  }
}

TEST_CASE("notification triggers") {
  auto count = [](std::set<NotifyTrigger> triggers, bool repaired) {
    Rig rig;
    rig.config.device(kContact).notify_triggers = std::move(triggers);
    notify_user(rig.ctx, kContact, FaultKind::StuckAt, NotifyEvent::FaultOccurred);
    notify_user(rig.ctx, kContact, FaultKind::StuckAt, repaired ? NotifyEvent::Repaired : NotifyEvent::Unrepaired);
    return rig.sink.records().size();
  };
  CHECK(count({NotifyTrigger::OnUnrepaired}, false) == 1);
  CHECK(count({}, false) == 0);
  CHECK(count({NotifyTrigger::OnFault, NotifyTrigger::OnRepaired, NotifyTrigger::OnUnrepaired}, true) == 2);

  NotificationSink sink;
  std::ostringstream os;
  sink.attach(&os);
  sink.write({42, kContact, FaultKind::Power, NotifyEvent::Unrepaired});
  CHECK(os.str() == "42,2,POWER,unrepaired\n");
}

TEST_CASE("transaction commit and abort") {
  Registry reg(default_home_catalog());
  auto log = transaction(reg, {{kWindow, 1}, {kHeater, 1}}, 0);
  CHECK(log.status == TransactionLog::Status::Committed);
  CHECK(reg.commanded(kWindow) == 1);
  CHECK(reg.commanded(kHeater) == 1);

  Registry r2(default_home_catalog());
  r2.faults()[kHeater] = ActiveFault{0, {0, kHeater, FaultKind::Communication, Fixability::Unfixable, 0, {}}, 0};
  log = transaction(r2, {{kWindow, 1}, {kHeater, 1}}, 0);
  CHECK(log.status == TransactionLog::Status::Aborted);
  CHECK(log.aborted_at == 1u);
  CHECK(r2.commanded(kWindow) == 0);

  CHECK(transaction(r2, {}, 0).status == TransactionLog::Status::Committed);
  CHECK_THROWS_AS(transaction(r2, {{kWindow, 1}, {kMotion, 1}}, 0), NotActuator);
  CHECK(r2.commanded(kWindow) == 0);
}

TEST_CASE("property: transaction abort restores the exact pre-state at every failure point") {
  std::mt19937_64 rng(8);
  const std::vector<DeviceId> targets{kDoorLock, kCoffee, kLight, kAlarm, kAirConditioner, kHeater, kWindow, kWaterValve};
  for (int round = 0; round < 200; ++round) {
    std::vector<std::pair<DeviceId, Value>> list;
    auto pool = targets;
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) list.emplace_back(pool[i], static_cast<Value>(rng() % 2));
    for (std::size_t fail_at = 0; fail_at < n; ++fail_at) {
      Registry reg(default_home_catalog());
      for (auto a : targets) reg.actuate(a, static_cast<Value>(rng() % 2), 0);
      const auto kinds = std::array{FaultKind::Power, FaultKind::Communication, FaultKind::CriticalError};
      reg.faults()[list[fail_at].first] =
          ActiveFault{0, {0, list[fail_at].first, kinds[rng() % 3], Fixability::Unfixable, 0, {}}, 0};
      const auto before = reg.snapshot(0).actuator_states;
      std::map<DeviceId, Value> commanded_before;
      for (auto a : targets) commanded_before[a] = reg.commanded(a);
      const auto log = transaction(reg, list, 1);
      REQUIRE(log.status == TransactionLog::Status::Aborted);
      REQUIRE(log.aborted_at == fail_at);
      REQUIRE(reg.snapshot(1).actuator_states == before);
      for (auto a : targets) REQUIRE(reg.commanded(a) == commanded_before[a]);
    }
  }
}

TEST_CASE("device suppression") {
  Registry reg(default_home_catalog());
  CHECK_THROWS_AS(suppress_device(reg, DeviceId{99}), UnknownDevice);
  CHECK_THROWS_AS(unsuppress_device(reg, DeviceId{99}), UnknownDevice);

  int delivered = 0;
  suppress_device(reg, kSmoke);
  for (Tick t = 0; t < 100; ++t) {
    reg.set_ground_truth(kSmoke, static_cast<Value>(t % 2));
    delivered += reg.read_device(kSmoke, t).health != Health::Suppressed;
  }
  CHECK(delivered == 0);
}

TEST_CASE("property: suppress and unsuppress round trip") {
  std::mt19937_64 rng(12);
  for (int round = 0; round < 100; ++round) {
    Registry reg(default_home_catalog());
    for (auto id : reg.sensor_ids()) reg.set_ground_truth(id, static_cast<Value>(rng() % 2));
    for (auto id : reg.actuator_ids()) reg.actuate(id, static_cast<Value>(rng() % 2), 0);
    if (rng() % 2) reg.redirect(kLight, kLightReplica);
    const auto id = reg.ids()[rng() % reg.size()];
    const auto snap = reg.snapshot(0);
    const auto supp = reg.suppressed();
    const auto redirects = reg.redirects();
    suppress_device(reg, id);
    unsuppress_device(reg, id);
    CHECK(reg.snapshot(0) == snap);
    CHECK(reg.suppressed() == supp);
    CHECK(reg.redirects() == redirects);
  }
}

TEST_CASE("app suppression follows the per-app flag") {
  auto apps = builtin_apps();
  AppSuppressions supp;
  suppress_apps_for(kPresence, apps, supp);
  CHECK(supp.suppressed_apps().empty());

  for (auto& a : apps) a.suppression_enabled = a.id == AppId{8};
  suppress_apps_for(kPresence, apps, supp);
  CHECK(supp.suppressed_apps() == std::set<AppId>{AppId{8}});
  suppress_apps_for(kWaterValve, apps, supp);
  CHECK(supp.suppressed_apps() == std::set<AppId>{AppId{8}});
  release_apps_for(kPresence, apps, supp);
  CHECK(supp.suppressed_apps().empty());
}

TEST_CASE("configuration API") {
  Rig rig;
  auto dc = rig.config.device(kMotion);
  dc.scheme = "TimeSensitive";
  CHECK(update_device_config(rig.ctx, kMotion, dc));
  CHECK(rig.config.device(kMotion).scheme == "TimeSensitive");

  dc.scheme = "NoSuchScheme";
  CHECK_THROWS_AS(update_device_config(rig.ctx, kMotion, dc), ValidationError);
  CHECK(rig.config.device(kMotion).scheme == "TimeSensitive");

  CHECK_THROWS_AS(add_device(rig.ctx, spec_for_class(kMotion, "dup", TypeClass::S1)), ValidationError);
  CHECK(add_device(rig.ctx, spec_for_class(DeviceId{40}, "motion_2", TypeClass::S1)));
  CHECK(rig.config.devices.count(DeviceId{40}));
  CHECK(remove_device(rig.ctx, kSmokeReplica));
  CHECK(rig.config.device(kSmoke).replicas.empty());

  CHECK(update_app_config(rig.ctx, AppId{8}, AppConfig{true}));
  CHECK(rig.apps[7].suppression_enabled);
  CHECK_THROWS_AS(update_app_config(rig.ctx, AppId{99}, AppConfig{true}), ValidationError);
}

TEST_CASE("redundancy detection") {
  Registry reg(default_home_catalog());
  const DeviceId twin{20}, far{21};
  reg.add(spec_for_class(twin, "motion_twin", TypeClass::S1));
  reg.add(spec_for_class(far, "motion_far", TypeClass::S1));
  std::mt19937_64 rng(6);
  StateHistory h;
  std::vector<Value> m(6000), f(6000), p(6000);
  Value cur = 0, other = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (rng() % 40 == 0) cur = 1 - cur;
    if (rng() % 25 == 0) other = 1 - other;
    m[i] = cur;
    f[i] = other;
    p[i] = i < 3000 ? 1 : 0;
  }
  h[kMotion] = m;
  h[twin] = m;
  h[far] = f;
  h[kPresence] = p;
  const RedundancyDetectionConfig cfg;
  const auto pairs = detect_redundant_devices(h, reg, cfg);
  CHECK(pairs == std::vector<std::pair<DeviceId, DeviceId>>{{kMotion, twin}, {twin, kMotion}});

  ConfigFile config;
  config.devices[kMotion].replicas = {far};
  record_replicas(config, pairs);
  CHECK(config.devices[kMotion].replicas == std::vector<DeviceId>{far, twin});
  CHECK(config.devices[twin].replicas == std::vector<DeviceId>{kMotion});
}

TEST_CASE("property: redundancy output is symmetric and irreflexive") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 20; ++round) {
    Registry reg;
    StateHistory h;
    std::vector<Value> base(5200);
    for (auto& v : base) v = static_cast<Value>(rng() % 50 == 0);
    for (int i = 0; i < 5; ++i) {
      const DeviceId id{i + 1};
      reg.add(spec_for_class(id, "m", TypeClass::S1));
      auto s = base;
      const int noise = static_cast<int>(rng() % 4);
      for (auto& v : s) {
        if (noise && rng() % (noise * 60) == 0) v = 1 - v;
      }
      h[id] = s;
    }
    const auto pairs = detect_redundant_devices(h, reg, {});
    std::set<std::pair<DeviceId, DeviceId>> set(pairs.begin(), pairs.end());
    for (const auto& [a, b] : pairs) {
      CHECK(a != b);
      CHECK(set.count({b, a}) == 1);
    }
  }
}
