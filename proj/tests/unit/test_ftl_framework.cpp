#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "common/rng.hpp"
#include "ftl/block_manager.hpp"
#include "ftl/gcm.hpp"
#include "ftl/host_interface.hpp"
#include "ftl/hrm.hpp"
#include "ftl/ideal_map_unit.hpp"

using namespace ssdsim;
using namespace ssdsim::ftl;

namespace {

struct TestSsd {
  EventEngine eng;
  BusyLedger ledger;
  nand::NandFlash nand;
  DataLayout layout;
  FtlStats stats;
  BlockManager bm;
  HostInterface host;
  IdealMapUnit map;
  HostRequestManager hrm;
  GarbageCollector gcm;
  std::uint64_t next_cmd_id = 1;
  std::uint64_t user_dlpns;

  static BlockManagerConfig tiny_bm_config(std::uint32_t reserve = 1) {
    BlockManagerConfig c;
    c.host_reserve_blocks = reserve;
    c.gc_low_watermark = 2;
    c.gc_high_watermark = 3;
    return c;
  }

  TestSsd(nand::NandGeometry g, std::uint32_t user_blocks,
          BlockManagerConfig bm_cfg = tiny_bm_config(), nand::NandTiming t = {})
      : nand(eng, ledger, g, t, g.page_data_bytes / 4096),
        layout(DataLayout::make(g, 4096, 512)),
        bm(eng, nand, layout, bm_cfg),
        host(eng, ledger, layout, HostLinkConfig{}, stats),
        map(eng, static_cast<std::size_t>(user_blocks) * g.pages_per_block *
                     (g.page_data_bytes / 4096)),
        hrm(eng, bm, map, host, layout, stats),
        gcm(eng, bm, map, layout, stats, GcConfig{2, 2}),
        user_dlpns(static_cast<std::uint64_t>(user_blocks) * g.pages_per_block *
                   (g.page_data_bytes / 4096)) {
    ledger.resize(eng.component_count());
  }

  void write(std::uint64_t lba, std::uint32_t sectors,
             SimTime* latency = nullptr) {
    HostCommand cmd{next_cmd_id++, true, lba, sectors, eng.now()};
    host.submit(cmd, [this, latency](const HostCommand& c) {
      if (latency) *latency = eng.now() - c.arrival;
    });
  }
  void read(std::uint64_t lba, std::uint32_t sectors, SimTime* latency = nullptr) {
    HostCommand cmd{next_cmd_id++, false, lba, sectors, eng.now()};
    host.submit(cmd, [this, latency](const HostCommand& c) {
      if (latency) *latency = eng.now() - c.arrival;
    });
  }
  void drain() { eng.run_to_completion(200'000'000); }

  // Single-owner + valid-count audit against the current flat map.
  void audit() {
    bm.audit_valid_counts([this](Dlpn d) { return map.flat().lookup(d); }, nullptr);
    // Every mapped DLPN resolves to exactly one programmed slot whose OOB
    // tag points back at it.
    const auto& g = nand.geometry();
    for (Dlpn d = 0; d < user_dlpns; ++d) {
      Dppn dppn = map.flat().lookup(d);
      if (dppn == kUnmapped) continue;
      std::uint32_t ppn = layout.ppn_of(dppn);
      const auto& st = nand.block_state(ppn / g.pages_per_block);
      std::uint32_t page = ppn % g.pages_per_block;
      REQUIRE(page < st.next_program_page);
      CHECK(st.oob[static_cast<std::size_t>(page) * layout.slots_per_page +
                   layout.slot_of(dppn)] == d);
    }
  }
};

nand::NandGeometry tiny_geometry(std::uint32_t channels = 1, std::uint32_t ways = 1,
                                 std::uint32_t planes = 1, std::uint32_t blocks = 8,
                                 std::uint32_t pages = 4) {
  nand::NandGeometry g;
  g.channels = channels;
  g.ways_per_channel = ways;
  g.planes_per_chip = planes;
  g.blocks_per_plane = blocks;
  g.pages_per_block = pages;
  return g;
}

}  // namespace

TEST_CASE("chop: 32 sectors over 4KB pages gives 4 aligned sub-requests") {
  DataLayout layout = DataLayout::make(tiny_geometry(), 4096, 512);
  HostCommand cmd{1, false, 0, 32, 0};
  auto subs = chop(cmd, layout);
  REQUIRE(subs.size() == 4);  // ceil(32 / 8)
  for (std::uint32_t i = 0; i < 4; ++i) {
    CHECK(subs[i].dlpn == i);
    CHECK(subs[i].sector_mask == 0xFF);
  }
}

TEST_CASE("chop: single-sector write has a partial mask") {
  DataLayout layout = DataLayout::make(tiny_geometry(), 4096, 512);
  HostCommand cmd{1, true, 11, 1, 0};
  auto subs = chop(cmd, layout);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].dlpn == 1);
  CHECK(subs[0].sector_mask == (1u << 3));
}

TEST_CASE("chop: maximum 65536-sector command chops cleanly") {
  DataLayout layout = DataLayout::make(tiny_geometry(), 4096, 512);
  HostCommand cmd{1, true, 8, 65536, 0};
  auto subs = chop(cmd, layout);
  CHECK(subs.size() == 8192);
  CHECK(subs.front().dlpn == 1);
  CHECK(subs.back().dlpn == 8192);
  std::uint64_t sectors = 0;
  for (auto& s : subs) sectors += std::popcount(s.sector_mask);
  CHECK(sectors == 65536);  // covers exactly the command's range
}

TEST_CASE("chop: unaligned range covers exactly and preserves order") {
  DataLayout layout = DataLayout::make(tiny_geometry(), 4096, 512);
  HostCommand cmd{1, false, 5, 14, 0};  // sectors 5..18
  auto subs = chop(cmd, layout);
  REQUIRE(subs.size() == 3);
  CHECK(subs[0].sector_mask == 0b11100000);        // sectors 5..7 of page 0
  CHECK(subs[1].sector_mask == 0xFF);              // page 1 full
  CHECK(subs[2].sector_mask == 0b00000111);        // sectors 16..18
}

TEST_CASE("dependency checker: RAW pends, RAR passes") {
  DependencyChecker dc;
  std::vector<SubRequest> released;
  dc.on_release = [&](const SubRequest& s) { released.push_back(s); };

  SubRequest w{1, 5, 0xFF, true};
  SubRequest r{2, 5, 0xFF, false};
  CHECK(dc.admit(w));
  CHECK_FALSE(dc.admit(r));  // read after in-flight write waits
  dc.complete(w);
  REQUIRE(released.size() == 1);
  CHECK(released[0].cmd_id == 2);
  dc.complete(r);

  SubRequest r1{3, 7, 0xFF, false};
  SubRequest r2{4, 7, 0xFF, false};
  CHECK(dc.admit(r1));
  CHECK(dc.admit(r2));  // concurrent reads pass
  dc.complete(r1);
  dc.complete(r2);
  CHECK(dc.idle());
}

// Randomized interleavings equal the sequential execution: page-level
// flat-array reference replaying sub-requests in arrival order.
TEST_CASE("dependency checker: serializability against sequential oracle") {
  Rng rng(99);
  for (int round = 0; round < 20; ++round) {
    DependencyChecker dc;
    std::map<Dlpn, int> value;         // what a write stored, by write id
    std::map<Dlpn, int> last_arrival;  // oracle: last write id in arrival order
    struct Active {
      SubRequest sub;
      int id;
      int observed;  // for reads: value at service time
    };
    std::vector<Active> running;
    std::vector<std::pair<SubRequest, int>> waiting_ids;
    int next_id = 1;

    dc.on_release = [&](const SubRequest& s) {
      // Find its id.
      auto it = std::find_if(waiting_ids.begin(), waiting_ids.end(),
                             [&](auto& p) { return p.first.cmd_id == s.cmd_id; });
      REQUIRE(it != waiting_ids.end());
      int id = it->second;
      waiting_ids.erase(it);
      if (s.is_write) value[s.dlpn] = id;
      running.push_back({s, id, s.is_write ? 0 : value.count(s.dlpn) ? value[s.dlpn] : 0});
    };

    std::map<Dlpn, std::vector<int>> write_order;  // arrival order of writes
    std::map<int, int> read_expect;  // read id -> latest write arrived before it

    for (int i = 0; i < 200; ++i) {
      if (rng.below(100) < 60 || running.empty()) {
        bool is_write = rng.below(2) == 0;
        Dlpn dlpn = static_cast<Dlpn>(rng.below(6));
        int id = next_id++;
        SubRequest sub{static_cast<std::uint64_t>(id), dlpn, 0xFF, is_write};
        if (is_write) {
          write_order[dlpn].push_back(id);
          last_arrival[dlpn] = id;
        } else {
          read_expect[id] = write_order[dlpn].empty() ? 0 : write_order[dlpn].back();
        }
        if (dc.admit(sub)) {
          if (is_write) value[dlpn] = id;
          running.push_back({sub, id, is_write ? 0 : (value.count(dlpn) ? value[dlpn] : 0)});
        } else {
          waiting_ids.emplace_back(sub, id);
        }
      } else {
        std::size_t pick = rng.below(running.size());
        Active a = running[pick];
        running.erase(running.begin() + pick);
        if (!a.sub.is_write) {
          // A read observes exactly the writes that preceded it in arrival order.
          CHECK(a.observed == read_expect[a.id]);
        }
        dc.complete(a.sub);
      }
    }
    while (!running.empty()) {
      Active a = running.back();
      running.pop_back();
      if (!a.sub.is_write) CHECK(a.observed == read_expect[a.id]);
      dc.complete(a.sub);
    }
    // Final state equals sequential execution in arrival order.
    for (auto& [dlpn, id] : last_arrival) CHECK(value[dlpn] == id);
    CHECK(dc.idle());
  }
}

// Sum-of-segments oracle for a mapped read on an idle 1-channel/1-way V2
// device with zero FTL time: cell 35us + bus floor-to-round(4096B/667MBps)
// + host round(4096B/15.76GBps) = 35000 + 6141 + 260 = 41401ns (about 41.4us).
TEST_CASE("mapped 4KB read latency composes cell, bus, and host segments") {
  TestSsd ssd(tiny_geometry(1, 1, 1, 8, 4), 4);
  ssd.write(0, 8);
  ssd.drain();

  SimTime latency = 0;
  ssd.read(0, 8, &latency);
  ssd.drain();
  SimTime expected = us(35) + transfer_ns(4096, 667'000'000) +
                     transfer_ns(4096, 15'760'000'000);
  CHECK(expected == 41401);
  CHECK(latency == expected);
}

TEST_CASE("unmapped read completes with no flash traffic") {
  TestSsd ssd(tiny_geometry(1, 1, 1, 8, 4), 4);
  SimTime latency = 0;
  ssd.read(64, 8, &latency);  // never written
  ssd.drain();
  CHECK(ssd.nand.stats().reads() == 0);
  CHECK(latency == 260);  // host transfer only
}

TEST_CASE("first write maps; overwrite invalidates the old slot") {
  TestSsd ssd(tiny_geometry(1, 1, 1, 8, 4), 4);
  ssd.write(0, 8);
  ssd.drain();
  Dppn first = ssd.map.flat().lookup(0);
  REQUIRE(first != kUnmapped);
  std::uint32_t first_block = ssd.layout.ppn_of(first) / 4;
  CHECK(ssd.bm.valid_count(first_block) == 1);

  ssd.write(0, 8);
  ssd.drain();
  Dppn second = ssd.map.flat().lookup(0);
  CHECK(second != first);
  // Old slot retired; the ledger reflects it.
  ssd.audit();
  CHECK(ssd.stats.host_written_slots == 2);
}

TEST_CASE("gc victim: least valid pages, ties to lowest block id") {
  // 1 plane, 16 blocks of 4 pages (16 slots each): enough headroom that GC
  // never fires while the test shapes the valid counts. Fill three blocks,
  // then dirty them unevenly.
  TestSsd ssd(tiny_geometry(1, 1, 1, 16, 4), 3);
  for (std::uint64_t lba = 0; lba < 3 * 16 * 8; lba += 8) ssd.write(lba, 8);
  ssd.drain();
  // Blocks 0,1,2 are closed and fully valid. Overwrite to drop validity:
  // block 0 loses 3 slots, block 1 loses 5, block 2 loses 5.
  auto overwrite_slot = [&](std::uint32_t block, std::uint32_t slot) {
    // Find a dlpn currently mapped into this block+slot.
    for (Dlpn d = 0; d < ssd.user_dlpns; ++d) {
      Dppn p = ssd.map.flat().lookup(d);
      if (p != kUnmapped && ssd.layout.ppn_of(p) / 4 == block &&
          p % 16 == slot) {
        ssd.write(static_cast<std::uint64_t>(d) * 8, 8);
        return;
      }
    }
    FAIL("no dlpn found for slot");
  };
  for (std::uint32_t s = 0; s < 3; ++s) overwrite_slot(0, s);
  ssd.drain();
  for (std::uint32_t s = 0; s < 5; ++s) overwrite_slot(1, s);
  ssd.drain();
  for (std::uint32_t s = 0; s < 5; ++s) overwrite_slot(2, s);
  ssd.drain();

  CHECK(ssd.bm.valid_count(0) == 13);
  CHECK(ssd.bm.valid_count(1) == 11);
  CHECK(ssd.bm.valid_count(2) == 11);
  auto victim = ssd.bm.pick_gc_victim();
  REQUIRE(victim.has_value());
  CHECK(*victim == 1);  // tie between 1 and 2 breaks to the lower id
}

TEST_CASE("sequential overwrite leaves zero-valid victims: erase only") {
  // high watermark == low: GC stops as soon as the trigger clears, so it
  // only ever takes the fully invalidated victims the overwrite leaves.
  BlockManagerConfig cfg = TestSsd::tiny_bm_config();
  cfg.gc_high_watermark = 2;
  TestSsd ssd(tiny_geometry(1, 1, 1, 8, 4), 5, cfg);
  // Fill the user span twice. Page-sized groups with settle time between
  // them keep pages packed and let invalidations land before GC picks
  // victims, so reclaim never copies a page.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::uint64_t lba = 0; lba < ssd.user_dlpns * 8; lba += 32) {
      for (std::uint64_t s = 0; s < 32; s += 8) ssd.write(lba + s, 8);
      ssd.eng.run_until(ssd.eng.now() + ms(10));
    }
    ssd.drain();
  }
  CHECK(ssd.stats.gc_erases > 0);
  CHECK(ssd.stats.gc_copied_slots == 0);
  ssd.audit();
}

TEST_CASE("random overwrites with GC keep mapping and valid counts exact") {
  TestSsd ssd(tiny_geometry(1, 2, 2, 6, 4), 12, TestSsd::tiny_bm_config(2));
  Rng rng(7);
  // Fill, then hammer random overwrites well past a device capacity.
  for (std::uint64_t d = 0; d < ssd.user_dlpns; ++d) ssd.write(d * 8, 8);
  ssd.drain();
  for (int i = 0; i < 2000; ++i) {
    ssd.write(rng.below(ssd.user_dlpns) * 8, 8);
    if (i % 16 == 0) ssd.eng.run_until(ssd.eng.now() + 500'000);
  }
  ssd.drain();
  CHECK(ssd.stats.gc_victims > 0);
  CHECK(ssd.stats.gc_copied_slots > 0);
  ssd.audit();
  // WAF at least 1 once GC is active.
  CHECK(ssd.nand.stats().program_bytes >= ssd.stats.host_written_slots * 4096);
}

TEST_CASE("program batching: 4 pending pages on a 2-plane chip form one op") {
  BlockManagerConfig cfg = TestSsd::tiny_bm_config();
  cfg.batching = ProgramBatching::MultiPlaneOneShot;
  TestSsd ssd(tiny_geometry(1, 1, 2, 8, 4), 8, cfg);
  // 16 slots = 4 full pages = exactly one one-shot multi-plane group.
  for (std::uint64_t lba = 0; lba < 16 * 8; lba += 8) ssd.write(lba, 8);
  ssd.drain();
  const auto& st = ssd.nand.stats();
  CHECK(st.ops_by_kind[static_cast<int>(nand::FlashOpKind::OneShotProgram)] == 1);
  CHECK(st.ops_by_kind[static_cast<int>(nand::FlashOpKind::ProgramPage)] == 0);
  ssd.audit();
}

TEST_CASE("single program with empty batch window degenerates to a plain page") {
  BlockManagerConfig cfg = TestSsd::tiny_bm_config();
  cfg.batching = ProgramBatching::MultiPlaneOneShot;
  TestSsd ssd(tiny_geometry(1, 1, 2, 8, 4), 8, cfg);
  ssd.write(0, 8);  // one slot; padded out by the partial-page window
  ssd.drain();
  const auto& st = ssd.nand.stats();
  CHECK(st.ops_by_kind[static_cast<int>(nand::FlashOpKind::ProgramPage)] == 1);
  CHECK(st.ops_by_kind[static_cast<int>(nand::FlashOpKind::OneShotProgram)] == 0);
}

TEST_CASE("read coalescing: consecutive slots of one page cost one flash read") {
  TestSsd ssd(tiny_geometry(1, 1, 1, 8, 4), 4);
  ssd.write(0, 32);  // 4 slots -> one full page
  ssd.drain();
  std::uint64_t reads_before = ssd.nand.stats().reads();
  ssd.read(0, 32);
  ssd.drain();
  CHECK(ssd.nand.stats().reads() - reads_before == 1);
}

TEST_CASE("sequential 8-slot read over two planes merges into multi-plane") {
  TestSsd ssd(tiny_geometry(1, 1, 2, 8, 4), 8);
  ssd.write(0, 64);  // 8 slots: page0 plane0 + page0 plane1 on the same chip
  ssd.drain();
  ssd.read(0, 64);
  ssd.drain();
  CHECK(ssd.nand.stats().ops_by_kind[static_cast<int>(nand::FlashOpKind::MultiPlaneRead)] ==
        1);
}
