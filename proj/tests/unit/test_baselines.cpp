#include <doctest.h>

#include "baseline/software_map_unit.hpp"
#include "common/rng.hpp"
#include "ftl/flat_map.hpp"
#include "mock_backend.hpp"

using namespace ssdsim;
using namespace ssdsim::baseline;
using ssdsim::testing::MockBackend;
using ftl::MapOp;
using ftl::MapOrigin;
using ftl::MapRequest;
using ftl::MapResponse;
using ftl::MapStatus;

namespace {

SoftwareMapConfig tiny_config(Scheme scheme, std::uint32_t cores = 1) {
  SoftwareMapConfig c;
  c.scheme = scheme;
  c.cores = cores;
  c.cmt_block_bytes = 8;  // 2 entries
  c.entry_bytes = 4;
  c.ways = 2;
  c.map_ram_bytes = 64;  // DFTL: 8 blocks
  c.cmt_bytes = 32;      // CDFTL: 4 blocks
  c.ctp_bytes = 64;      // CDFTL: 2 pages of 16 bytes... adjusted per epp below
  return c;
}

struct Harness {
  EventEngine eng;
  MockBackend backend;
  SoftwareMapUnit unit;
  std::vector<MapResponse> responses;
  std::vector<SimTime> response_times;
  std::uint64_t next_tag = 1;

  explicit Harness(SoftwareMapConfig cfg, std::uint32_t pages = 8,
                   std::uint32_t epp = 4)
      : backend(eng, epp, pages),
        unit(eng, nullptr, backend, cfg,
             static_cast<std::size_t>(pages) * epp) {
    unit.set_response_handler(MapOrigin::Hrm, [this](const MapResponse& r) {
      responses.push_back(r);
      response_times.push_back(eng.now());
    });
    unit.set_response_handler(MapOrigin::Gcm, [this](const MapResponse& r) {
      responses.push_back(r);
      response_times.push_back(eng.now());
    });
  }

  std::uint64_t lookup(Dlpn d) {
    std::uint64_t tag = next_tag++;
    unit.submit(MapRequest{MapOp::Lookup, MapOrigin::Hrm, d, kUnmapped, kUnmapped, tag});
    return tag;
  }
  std::uint64_t update(Dlpn d, Dppn v) {
    std::uint64_t tag = next_tag++;
    unit.submit(MapRequest{MapOp::Update, MapOrigin::Hrm, d, v, kUnmapped, tag});
    return tag;
  }
  void run() { eng.run_to_completion(5'000'000); }
  SimTime time_of(std::uint64_t tag) const {
    for (std::size_t i = 0; i < responses.size(); ++i)
      if (responses[i].tag == tag) return response_times[i];
    FAIL("no response for tag");
    return 0;
  }
};

}  // namespace

TEST_CASE("dftl hit service: 1.5us at 1 core, 0.375us at 4 cores") {
  for (std::uint32_t cores : {1u, 4u}) {
    Harness h(tiny_config(Scheme::Dftl, cores), 8, 4);
    // Prime one block, then measure a pure hit.
    h.lookup(0);
    h.run();
    SimTime t0 = h.eng.now();
    std::uint64_t tag = h.lookup(0);
    h.run();
    SimTime service = h.time_of(tag) - t0;
    CHECK(service == (cores == 1 ? 1500 : 375));
  }
}

TEST_CASE("dftl miss service is about three times the hit service") {
  BaselineCostModel m;
  CHECK(m.dftl_miss == 3 * m.dftl_hit);

  Harness h(tiny_config(Scheme::Dftl), 8, 4);
  SimTime t0 = h.eng.now();
  std::uint64_t tag = h.lookup(0);  // cold miss
  h.run();
  // Miss latency = miss service + translation page read (35us in the mock).
  CHECK(h.time_of(tag) - t0 == 4500 + 35'000);
}

TEST_CASE("cdftl hit (cmt miss, ctp hit) runs about 2.5x slower than dftl hit") {
  BaselineCostModel m;
  double ratio = static_cast<double>(m.cdftl_ctp_hit) / m.dftl_hit;
  CHECK(ratio > 2.4);
  CHECK(ratio < 2.8);

  Harness h(tiny_config(Scheme::Cdftl), 8, 4);
  // Load the translation page into the CTP, then touch a different CMT block
  // of the same page: CMT miss, CTP hit, no flash read.
  h.lookup(0);
  h.run();
  std::uint64_t reads0 = h.backend.reads;
  SimTime t0 = h.eng.now();
  std::uint64_t tag = h.lookup(2);  // same tvpn 0, different CMT block
  h.run();
  CHECK(h.backend.reads == reads0);  // served from the second level
  CHECK(h.time_of(tag) - t0 == 4000);
}

TEST_CASE("blocking: a hit waits behind an outstanding miss on the same core") {
  Harness h(tiny_config(Scheme::Dftl), 8, 4);
  h.lookup(0);
  h.run();  // dlpn 0 now cached

  std::uint64_t miss_tag = h.lookup(8);  // different translation page, miss
  std::uint64_t hit_tag = h.lookup(0);   // would be a hit, but the core blocks
  h.run();
  CHECK(h.time_of(hit_tag) > h.time_of(miss_tag));
  // And the second service began only after the first finished.
  const auto& log = h.unit.service_log(0);
  REQUIRE(log.size() >= 3);
  CHECK(log[2] >= h.time_of(miss_tag));
}

TEST_CASE("dftl re-reads a translation page that cdftl keeps resident") {
  // Sequential lookups spanning one translation page with a CMT too small to
  // hold all of its blocks: DFTL reloads the page from flash on each
  // eviction; CDFTL's second level absorbs them.
  SoftwareMapConfig dftl_cfg = tiny_config(Scheme::Dftl);
  dftl_cfg.map_ram_bytes = 16;  // 2 blocks only
  Harness dftl(dftl_cfg, 4, 16);  // 16 entries per page: 8 blocks per page

  SoftwareMapConfig cdftl_cfg = tiny_config(Scheme::Cdftl);
  cdftl_cfg.cmt_bytes = 16;
  cdftl_cfg.ctp_bytes = 256;  // room for the page (16 entries x 4B)
  Harness cdftl(cdftl_cfg, 4, 16);

  for (int pass = 0; pass < 2; ++pass)
    for (Dlpn d = 0; d < 16; ++d) {
      dftl.lookup(d);
      dftl.run();
      cdftl.lookup(d);
      cdftl.run();
    }
  CHECK(dftl.backend.reads > cdftl.backend.reads);
  CHECK(cdftl.backend.reads == 1);  // one load serves the whole page
}

TEST_CASE("route_by_core: identity at 1 core, balanced at 4") {
  Harness one(tiny_config(Scheme::Dftl, 1), 8, 4);
  for (Dlpn d = 0; d < 32; ++d) CHECK(one.unit.route_by_core(d) == 0);

  Harness four(tiny_config(Scheme::Dftl, 4), 8, 4);
  // Ranges are contiguous, disjoint, covering.
  std::uint32_t prev = 0;
  std::vector<std::uint32_t> counts(4, 0);
  for (Dlpn d = 0; d < 32; ++d) {
    std::uint32_t core = four.unit.route_by_core(d);
    CHECK(core >= prev);
    CHECK(core < 4);
    prev = core;
    counts[core]++;
  }
  for (std::uint32_t c : counts) CHECK(c == 8);

  // Uniform random DLPNs spread within 5% of an even share.
  Rng rng(3);
  std::vector<std::uint64_t> hits(4, 0);
  const int draws = 100'000;
  for (int i = 0; i < draws; ++i)
    hits[four.unit.route_by_core(static_cast<Dlpn>(rng.below(32)))]++;
  for (auto h : hits) {
    CHECK(h > draws / 4 * 0.95);
    CHECK(h < draws / 4 * 1.05);
  }
}

TEST_CASE("dftl flush cost scales with the number of CMT blocks") {
  // Two sizes, same workload shape: the scan accounts for every block.
  std::uint64_t scanned_small = 0, scanned_large = 0;
  for (int which = 0; which < 2; ++which) {
    SoftwareMapConfig cfg = tiny_config(Scheme::Dftl);
    cfg.map_ram_bytes = which == 0 ? 32 : 64;  // 4 vs 8 blocks
    cfg.dirty_flush_threshold = 0.2;
    Harness h(cfg, 8, 4);
    for (Dlpn d = 0; d < 16; ++d) {
      h.update(d, d + 1);
      h.run();
    }
    bool done = false;
    h.unit.force_flush([&] { done = true; });
    h.run();
    REQUIRE(done);
    REQUIRE(h.unit.stats().flushes > 0);
    std::uint64_t per_flush =
        h.unit.stats().flush_blocks_scanned / h.unit.stats().flushes;
    (which == 0 ? scanned_small : scanned_large) = per_flush;
  }
  CHECK(scanned_large == 2 * scanned_small);
}

TEST_CASE("oracle equivalence: dftl and cdftl flushed state matches the mirror") {
  for (Scheme scheme : {Scheme::Dftl, Scheme::Cdftl}) {
    SoftwareMapConfig cfg = tiny_config(scheme, 2);
    cfg.dirty_flush_threshold = 0.4;
    Harness h(cfg, 8, 4);
    ftl::FlatMap mirror(32);
    h.unit.set_apply_observer([&](const MapRequest& req, bool applied) {
      if (req.kind == MapOp::Update)
        mirror.update(req.dlpn, req.new_dppn);
      else if (req.kind == MapOp::CondUpdate && applied)
        CHECK(mirror.cond_update(req.dlpn, req.new_dppn, req.old_dppn));
    });
    Rng rng(19);
    for (int i = 0; i < 500; ++i) {
      Dlpn d = static_cast<Dlpn>(rng.below(32));
      if (rng.below(2) == 0)
        h.lookup(d);
      else
        h.update(d, static_cast<Dppn>(rng.below(900)));
      if (rng.below(6) == 0) h.run();
    }
    h.run();
    bool done = false;
    h.unit.force_flush([&] { done = true; });
    h.run();
    REQUIRE(done);
    CHECK(h.unit.reconstruct_map() == mirror.raw());
  }
}
