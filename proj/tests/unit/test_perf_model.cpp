#include <doctest.h>

#include <set>
#include <sstream>

#include "perf/perf_model.hpp"

using namespace ssdsim;
using namespace ssdsim::perf;

namespace {

// V2 parameters for a 4KB random read with no bus overhead.
TimingParams v2_params(SimTime t_ftl = 0) {
  TimingParams p = TimingParams::from_nand(nand::NandTiming{}, 4096,
                                           15'760'000'000ull);
  p.t_ftl_map = t_ftl;
  return p;
}

}  // namespace

TEST_CASE("zero parameters give zero latency") {
  TimingParams p{};
  p.t_nand_read = 0;
  CHECK(read_latency(p, true) == 0);
  CHECK(read_latency(p, false) == 0);
}

TEST_CASE("hit latency is the sum of the five segments") {
  TimingParams p = v2_params(us(1));
  p.t_ftl_cmd = 200;
  // Arithmetic oracle, segment by segment.
  SimTime expected = us(1) + 200 + us(35) + transfer_ns(4096, 667'000'000) +
                     transfer_ns(4096, 15'760'000'000ull);
  CHECK(read_latency(p, true) == expected);
}

TEST_CASE("miss adds exactly one extra read-plus-bus leg") {
  TimingParams p = v2_params(us(2));
  CHECK(read_latency(p, false) - read_latency(p, true) ==
        p.t_nand_read + p.t_nand_bus);
}

TEST_CASE("bottleneck crossover matches the published analysis") {
  // 100% hit ratio, t_ftl = 1us: the FTL binds at 8-channel/8-way with a
  // saturation of 1.0 MIOPS.
  TimingParams p = v2_params(us(1));
  TopologyParams topo;
  topo.channels = 8;
  topo.ways = 8;
  auto r = saturation_iops(p, topo, true, 4096);
  CHECK(r.binding == Stage::Ftl);
  CHECK(r.min_iops == doctest::Approx(1e6).epsilon(0.01));

  // One step down the channel axis the bus binds instead.
  topo.channels = 4;
  CHECK(saturation_iops(p, topo, true, 4096).binding == Stage::Bus);

  // 0% hit ratio: both NAND legs run twice, so the FTL only binds from
  // 16-channel/8-way.
  topo.channels = 8;
  CHECK(saturation_iops(p, topo, false, 4096).binding == Stage::Bus);
  topo.channels = 16;
  auto miss16 = saturation_iops(p, topo, false, 4096);
  CHECK(miss16.binding == Stage::Ftl);
  CHECK(miss16.min_iops == doctest::Approx(1e6).epsilon(0.01));
}

TEST_CASE("with zero FTL time only the NAND and host bounds remain") {
  TimingParams p = v2_params(0);
  TopologyParams topo;
  topo.channels = 1;
  topo.ways = 1;
  auto r = saturation_iops(p, topo, true, 4096);
  CHECK(r.binding == Stage::Chip);
  CHECK(r.min_iops == doctest::Approx(1e9 / 35000.0).epsilon(0.001));
}

TEST_CASE("sweep emits every channel point and binding labels change monotonically") {
  TimingParams p = v2_params(us(1));
  TopologyParams topo;
  auto points = sweep({1, 2, 4, 8, 16}, {8}, {us(1)}, {true}, p, topo, 4096);
  REQUIRE(points.size() == 5);
  CHECK(points.front().channels == 1);

  // The 1-channel/1-way row is chip-bound.
  auto single = sweep({1}, {1}, {us(1)}, {true}, p, topo, 4096);
  CHECK(single[0].result.binding == Stage::Chip);

  // Along the channel axis a stage never rebinds once it has been passed.
  std::set<Stage> seen;
  Stage prev = points[0].result.binding;
  for (const auto& pt : points) {
    Stage cur = pt.result.binding;
    if (cur != prev) {
      CHECK(seen.count(cur) == 0);
      seen.insert(prev);
      prev = cur;
    }
  }

  std::ostringstream csv;
  write_sweep_csv(csv, points);
  CHECK(csv.str().find("channels,ways,t_ftl_ns,hit") == 0);
  CHECK(csv.str().find("ftl") != std::string::npos);
}
