#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "fmmu/cache_sets.hpp"
#include "ftl/map_unit.hpp"
#include "ftl/translation_store.hpp"
#include "sim/busy_ledger.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::baseline {

enum class Scheme : std::uint8_t { Dftl, Cdftl };

// Per-operation CPU costs of the software map caches, by case. The 1-core
// values follow the measured runs; n cores scale them by 1/n and partition
// the cache RAM n ways.
struct BaselineCostModel {
  SimTime dftl_hit = 1'500;        // CMT hit
  SimTime dftl_miss = 4'500;       // victim search + read issue, about 3x hit
  SimTime cdftl_cmt_hit = 1'500;
  SimTime cdftl_ctp_hit = 4'000;   // CMT miss resolved in CTP
  SimTime cdftl_miss = 12'000;     // miss in both levels
  SimTime flush_scan_per_block = 25;  // dirty-block scan, per CMT block
  SimTime t_ftl_cmd = 0;

  SimTime scaled(SimTime base, std::uint32_t cores) const { return base / cores; }
};

struct SoftwareMapConfig {
  Scheme scheme = Scheme::Dftl;
  std::uint32_t cores = 1;
  std::uint32_t map_ram_bytes = 1'088 * 1024;  // all CMT for DFTL
  std::uint32_t cmt_bytes = 64 * 1024;         // CDFTL split
  std::uint32_t ctp_bytes = 1'024 * 1024;
  std::uint32_t cmt_block_bytes = 64;
  std::uint32_t entry_bytes = 4;
  std::uint32_t ways = 4;
  double dirty_flush_threshold = 0.5;  // of blocks, per level
  BaselineCostModel cost;
};

// DFTL and CDFTL: software map caches executed by statically partitioned
// cores. Blocking semantics: a core that misses stalls until the translation
// page read completes; flushes scan every CMT block for same-TVPN dirt.
class SoftwareMapUnit : public ftl::MapUnit {
 public:
  SoftwareMapUnit(EventEngine& engine, BusyLedger* ledger,
                  ftl::TranslationBackend& backend, SoftwareMapConfig config,
                  std::size_t total_dlpns);

  void submit(ftl::MapRequest req) override;
  void force_flush(std::function<void()> done) override;
  std::vector<Dppn> reconstruct_map() const override;
  Tppn gtd_lookup(Tvpn tvpn) const override { return backend_.gtd_lookup(tvpn); }
  bool gtd_relocate(Tvpn tvpn, Tppn new_tppn, Tppn old_tppn) override {
    return backend_.relocate(tvpn, new_tppn, old_tppn);
  }
  void dump(std::ostream& os) const override;

  // Static DLPN-range partitioning: disjoint contiguous ranges covering the
  // whole space.
  std::uint32_t route_by_core(Dlpn dlpn) const;

  struct Stats {
    std::uint64_t cmt_hits = 0;
    std::uint64_t ctp_hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t flushes = 0;
    std::uint64_t flush_blocks_scanned = 0;
  };
  const Stats& stats() const { return stats_; }
  ComponentId core_component(std::uint32_t core) const { return cores_[core].comp; }
  // Service-begin timestamps per core, for the blocking-property assertions.
  const std::vector<SimTime>& service_log(std::uint32_t core) const {
    return cores_[core].service_log;
  }

 private:
  struct SwBlock {
    fmmu::CacheState state = fmmu::CacheState::Invalid;
    bool referenced = false;
    std::uint32_t tag = 0;
    std::vector<Dppn> entries;
  };
  struct Core {
    ComponentId comp;
    fmmu::SetArray<SwBlock> cmt{1, 1};
    std::optional<fmmu::SetArray<SwBlock>> ctp;
    std::deque<ftl::MapRequest> queue;
    bool busy = false;
    std::uint32_t dirty_cmt = 0;
    std::uint32_t dirty_ctp = 0;
    std::vector<SimTime> service_log;
  };

  void kick(std::uint32_t core);
  void serve(std::uint32_t core, ftl::MapRequest req);
  void finish_request(std::uint32_t core, const ftl::MapRequest& req,
                      SwBlock& block, std::uint32_t idx);
  // Blocking flush chain; calls `next` when the core may continue.
  void flush_cmt(std::uint32_t core, std::function<void()> next);
  void flush_ctp_block(std::uint32_t core, std::uint32_t set, std::uint32_t way,
                       std::function<void()> next);
  void merge_into_ctp(std::uint32_t core, Tvpn tvpn,
                      std::vector<std::pair<std::uint32_t, Dppn>> pairs,
                      std::function<void()> next);
  bool needs_cmt_flush(Core& c) const;
  void check_drained();
  void busy_mark(Core& c, SimTime from);

  SimTime cost_hit() const;
  SimTime cost_ctp_hit() const;
  SimTime cost_miss() const;

  EventEngine& engine_;
  BusyLedger* ledger_;
  ftl::TranslationBackend& backend_;
  SoftwareMapConfig config_;
  std::uint32_t total_dlpns_;
  std::uint32_t entries_per_tp_;
  std::uint32_t entries_per_block_;

  std::vector<Core> cores_;
  Stats stats_;
  std::uint32_t outstanding_flash_ = 0;
  std::function<void()> drain_done_;
  std::uint32_t drain_core_cursor_ = 0;
};

}  // namespace ssdsim::baseline
