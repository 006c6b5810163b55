#include "doctest.h"
#include "hearth/fault.hpp"
#include "hearth/registry.hpp"

using namespace hearth;
using namespace hearth::home;

namespace {

ActiveFault active(FaultKind k, Value param, Tick at = 0) {
  return ActiveFault{0, FaultSpec{at, kTemperature, k, Fixability::Unfixable, param, std::nullopt}, at};
}

}  // namespace

TEST_CASE("schedule parsing") {
  Registry reg(default_home_catalog());
  auto s = parse_fault_schedule_text("1000,1,STUCK_AT,UNFIXABLE,0\n", reg);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == FaultSpec{1000, kMotion, FaultKind::StuckAt, Fixability::Unfixable, 0, std::nullopt});

  s = parse_fault_schedule_text("1000,1,STUCK_AT,UNFIXABLE,0\n2000,1,NO_FAULT,-,0\n", reg);
  REQUIRE(s.size() == 1);
  CHECK(s[0].end_tick == 2000);

  CHECK(parse_fault_schedule_text("", reg).empty());
  CHECK_THROWS_AS(parse_fault_schedule_text("2000,1,NO_FAULT,-,0\n", reg), DanglingRemoval);
  CHECK_THROWS_AS(parse_fault_schedule_text("5,99,POWER,SOFT_FIXABLE,0\n", reg), UnknownDevice);
  try {
    parse_fault_schedule_text("tick,device_id,kind,fixability,value\n10,1,BOGUS,SOFT_FIXABLE,0\n", reg);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("four-field rows read as stuck-at") {
  Registry reg(default_home_catalog());
  const auto s = parse_fault_schedule_text("1000,1,UNFIXABLE,1\n2000,1,NO_FAULT,0\n", reg);
  REQUIRE(s.size() == 1);
  CHECK(s[0].kind == FaultKind::StuckAt);
  CHECK(s[0].param == 1);
  CHECK(s[0].end_tick == 2000);
}

TEST_CASE("schedule text round trip") {
  Registry reg(default_home_catalog());
  const auto text = "100,3,SPIKE,HARD_FIXABLE,30\n150,3,NO_FAULT,-,0\n200,8,POWER,SOFT_FIXABLE,0\n";
  const auto s = parse_fault_schedule_text(text, reg);
  CHECK(parse_fault_schedule_text(format_fault_schedule(s), reg) == s);
}

TEST_CASE("apply_faults activation and replacement") {
  std::vector<FaultSpec> sched{{100, kMotion, FaultKind::StuckAt, Fixability::Unfixable, 1, 300},
                               {200, kMotion, FaultKind::Outlier, Fixability::Unfixable, 0, 250}};
  FaultTable t;
  for (Tick tick = 0; tick <= 300; ++tick) {
    t = apply_faults(sched, tick, std::move(t));
    CHECK(t.size() <= 1);
    if (tick == 100) CHECK(t.at(kMotion).spec.kind == FaultKind::StuckAt);
    if (tick == 150) CHECK(t.at(kMotion).id == 0);
    if (tick == 200) CHECK(t.at(kMotion).spec.kind == FaultKind::Outlier);
    if (tick == 250) CHECK(t.empty());
  }
}

TEST_CASE("reading transforms") {
  const auto bin = ValueDomain::binary();
  const auto temp = ValueDomain::real(0, 120, "F");
  CHECK(transform_reading(1, active(FaultKind::StuckAt, 0), 5, bin) == 0.0);

  const auto out = active(FaultKind::Outlier, 120, 10);
  CHECK(transform_reading(70, out, 10, temp) == 120.0);
  CHECK(transform_reading(70, out, 11, temp) == 70.0);
  CHECK(transform_reading(71, out, 12, temp) == 71.0);

  const auto hv = active(FaultKind::HighVariance, 0, 0);
  const Value expect[] = {1, 0, 1, 0};
  for (Tick t = 0; t < 4; ++t) CHECK(transform_reading(0, hv, t, bin) == expect[t]);
  const auto hv_num = active(FaultKind::HighVariance, 0, 0);
  CHECK(transform_reading(75, hv_num, 0, temp) == 85.0);
  CHECK(transform_reading(75, hv_num, 1, temp) == 65.0);
  CHECK(transform_reading(115, hv_num, 0, temp) == 120.0);

  // Triangle with rise 10: offsets 0..9 climb to the full amplitude, 10..19 fall back.
  const auto sp = active(FaultKind::Spike, 30, 0);
  CHECK(transform_reading(70, sp, 0, temp) == doctest::Approx(73));
  CHECK(transform_reading(70, sp, 9, temp) == doctest::Approx(100));
  CHECK(transform_reading(70, sp, 10, temp) == doctest::Approx(97));
  CHECK(transform_reading(70, sp, 19, temp) == doctest::Approx(70));
  CHECK(transform_reading(0, active(FaultKind::Spike, 0), 0, bin) == 1.0);

  for (auto k : {FaultKind::Power, FaultKind::Communication, FaultKind::CriticalError})
    CHECK_FALSE(transform_reading(1, active(k, 0), 0, bin).has_value());
}

TEST_CASE("fail-stop kinds behave alike on read and actuate") {
  for (auto k : {FaultKind::Power, FaultKind::Communication, FaultKind::CriticalError}) {
    Registry reg(default_home_catalog());
    reg.set_ground_truth(kMotion, 1);
    reg.read_device(kMotion, 0);
    reg.faults()[kMotion] = ActiveFault{0, {1, kMotion, k, Fixability::Unfixable, 0, std::nullopt}, 1};
    reg.faults()[kLight] = ActiveFault{1, {1, kLight, k, Fixability::Unfixable, 0, std::nullopt}, 1};
    reg.set_ground_truth(kMotion, 0);
    const auto st = reg.read_device(kMotion, 1);
    CHECK(st.health == Health::Unresponsive);
    CHECK(st.value == 1);
    CHECK(reg.actuate(kLight, 1, 1) == ActuationResult::Unresponsive);
  }
}

TEST_CASE("perfect oracle timing") {
  std::vector<FaultSpec> sched{{1000, kMotion, FaultKind::StuckAt, Fixability::Unfixable, 1, 1100},
                               {1000, kContact, FaultKind::Power, Fixability::Unfixable, 0, 1100}};
  for (Tick d : {Tick{0}, Tick{5}}) {
    PerfectOracle oracle(d);
    FaultTable t;
    std::vector<std::pair<Tick, FaultReport>> seen;
    for (Tick tick = 0; tick < 1200; ++tick) {
      t = apply_faults(sched, tick, std::move(t));
      for (const auto& r : oracle.identify(t, tick)) seen.emplace_back(tick, r);
    }
    REQUIRE(seen.size() == 2);
    CHECK(seen[0].first == 1000 + d);
    CHECK(seen[0].second.device == kMotion);
    CHECK(seen[0].second.kind == FaultKind::StuckAt);
    CHECK(seen[1].second.device == kContact);
    CHECK(seen[1].second.detected_tick == 1000 + d);
    CHECK_FALSE(oracle.fault_free(990, 1005));
    CHECK(oracle.fault_free(0, 999));
    CHECK(oracle.fault_free(1100, 1199));
  }
}

TEST_CASE("property: oracle reports exactly the activated faults") {
  Registry reg(default_home_catalog());
  const auto sched = generate_fault_schedule(5, FaultProfile::multiple(), reg, 20000);
  PerfectOracle oracle;
  FaultTable t;
  std::size_t reports = 0;
  std::set<std::pair<Tick, DeviceId>> starts;
  for (const auto& f : sched) starts.emplace(f.start_tick, f.device);
  for (Tick tick = 0; tick < 20000; ++tick) {
    t = apply_faults(sched, tick, std::move(t));
    for (const auto& r : oracle.identify(t, tick)) {
      ++reports;
      CHECK(starts.count({tick, r.device}) == 1);
      CHECK(oracle.is_faulty(r.device, tick));
    }
  }
  CHECK(reports == sched.size());
}

TEST_CASE("generated schedules are deterministic and well formed") {
  Registry reg(default_home_catalog());
  const auto a = generate_fault_schedule(11, FaultProfile::single(), reg, 50000);
  CHECK(a == generate_fault_schedule(11, FaultProfile::single(), reg, 50000));
  std::map<DeviceId, int> per_device;
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].end_tick);
    CHECK(*a[i].end_tick > a[i].start_tick);
    if (i > 0) CHECK(a[i].start_tick >= *a[i - 1].end_tick);
    ++per_device[a[i].device];
  }
  // Even coverage: every physical device is hit, none more than one round ahead.
  CHECK(per_device.size() == 17);
  int lo = 1 << 30, hi = 0;
  for (const auto& [d, n] : per_device) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  CHECK(hi - lo <= 1);
}
