#include <doctest.h>

#include <vector>

#include "sim/busy_ledger.hpp"
#include "sim/event_engine.hpp"

using namespace ssdsim;

TEST_CASE("events dispatch in (fire_at, seq) order") {
  EventEngine eng;
  ComponentId c = eng.register_component("c");
  std::vector<int> order;

  eng.schedule_at(10, c, [&] { order.push_back(2); });
  eng.schedule_at(0, c, [&] { order.push_back(1); });
  // Two events at the same time dispatch in scheduling order.
  eng.schedule_at(20, c, [&] { order.push_back(3); });
  eng.schedule_at(20, c, [&] { order.push_back(4); });

  std::size_t n = eng.run_until(20);
  CHECK(n == 4);
  CHECK(order == std::vector<int>{1, 2, 3, 4});
  CHECK(eng.now() == 20);
}

TEST_CASE("empty queue run_until still advances now") {
  EventEngine eng;
  CHECK(eng.run_until(1000) == 0);
  CHECK(eng.now() == 1000);
}

TEST_CASE("run_until dispatches only events at or before t") {
  EventEngine eng;
  ComponentId c = eng.register_component("c");
  int fired = 0;
  eng.schedule_at(1, c, [&] { ++fired; });
  eng.schedule_at(2, c, [&] { ++fired; });
  eng.schedule_at(3, c, [&] { ++fired; });
  eng.schedule_at(4, c, [&] { ++fired; });
  CHECK(eng.run_until(3) == 3);
  CHECK(fired == 3);
  CHECK(eng.now() == 3);
  CHECK(eng.pending() == 1);
}

TEST_CASE("scheduling in the past is a fatal model error") {
  EventEngine eng;
  ComponentId c = eng.register_component("c");
  eng.schedule_at(100, c, [] {});
  eng.run_until(100);
  CHECK_THROWS_AS(eng.schedule_at(99, c, [] {}), SimError);
}

TEST_CASE("dispatch order is non-decreasing in fire_at") {
  EventEngine eng;
  ComponentId c = eng.register_component("c");
  eng.enable_dispatch_log(true);
  // Events scheduling further events, deliberately out of insertion order.
  eng.schedule_at(50, c, [&] {});
  eng.schedule_at(5, c, [&] {
    eng.schedule_at(7, c, [] {});
    eng.schedule_at(5, c, [] {});
  });
  eng.run_to_completion();
  SimTime prev = 0;
  for (const auto& rec : eng.dispatch_log()) {
    CHECK(rec.fire_at >= prev);
    prev = rec.fire_at;
  }
}

// Replay oracle: two identically-driven runs produce identical dispatch logs.
TEST_CASE("identical runs have identical dispatch logs") {
  auto drive = [](EventEngine& eng) {
    ComponentId a = eng.register_component("a");
    ComponentId b = eng.register_component("b");
    eng.enable_dispatch_log(true);
    for (int i = 0; i < 100; ++i) {
      eng.schedule_at((i * 37) % 60, i % 2 ? a : b, [&eng, a, i] {
        if (i % 3 == 0) eng.schedule_in(5, a, [] {});
      });
    }
    eng.run_to_completion();
  };
  EventEngine e1, e2;
  drive(e1);
  drive(e2);
  REQUIRE(e1.dispatch_log().size() == e2.dispatch_log().size());
  CHECK(e1.dispatch_log() == e2.dispatch_log());
}

TEST_CASE("busy ledger accumulates disjoint intervals") {
  BusyLedger ledger(2);
  ledger.mark_busy(0, 0, 10);
  ledger.mark_busy(0, 20, 30);
  CHECK(ledger.busy_ns(0) == 20);
  CHECK(ledger.busy_ns(1) == 0);
}

TEST_CASE("utilization is busy over elapsed") {
  BusyLedger ledger(1);
  ledger.mark_busy(0, 10, 60);
  CHECK(ledger.utilization(0, 100) == doctest::Approx(0.5));
  CHECK(ledger.utilization(0, 100) >= 0.0);
  CHECK(ledger.utilization(0, 100) <= 1.0);
}

TEST_CASE("overlapping busy intervals are fatal") {
  BusyLedger ledger(1);
  ledger.mark_busy(0, 0, 10);
  CHECK_THROWS_AS(ledger.mark_busy(0, 5, 15), SimError);
}

TEST_CASE("window start clips intervals") {
  BusyLedger ledger(1);
  ledger.set_window_start(50);
  ledger.mark_busy(0, 40, 60);  // straddles the window start
  CHECK(ledger.busy_ns(0) == 10);
  ledger.mark_busy(0, 60, 70);
  CHECK(ledger.utilization(0, 70) == doctest::Approx(1.0));
}
