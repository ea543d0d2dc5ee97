#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>

#include "ftl/block_manager.hpp"
#include "ftl/map_unit.hpp"
#include "ftl/stats.hpp"

namespace ssdsim::ftl {

struct GcConfig {
  std::uint32_t reads_in_flight = 2;  // per collection; keeps chip queues fair
  // Bound on simultaneous copying collections. Each one transiently consumes
  // up to a block of copy space, so the BM host reserve must cover this.
  std::uint32_t max_concurrent_collections = 32;
};

// Garbage Collection Manager. Victims are the globally least-valid closed
// blocks; several collections run concurrently, each reading its victim's
// pages, checking OOB logical addresses against the map, copying live slots
// through the BM, sealing each move with CondUpdate, and erasing once
// everything is durable. Translation pages relocate against the GTD directly.
class GarbageCollector {
 public:
  GarbageCollector(EventEngine& engine, BlockManager& bm, MapUnit& map,
                   DataLayout layout, FtlStats& stats, GcConfig config = {});

  // Wired to BlockManager::on_gc_needed; also safe to call any time.
  void gc_needed();
  void on_map_response(const MapResponse& resp);

  bool idle() const { return active_.empty(); }
  // Valid-page fraction of the most recently selected victim; feeds the
  // arbitration weight adaptation.
  double current_victim_valid_fraction() const { return victim_valid_fraction_; }

 private:
  struct Collection {
    std::uint32_t victim = 0;
    std::uint32_t next_page = 0;
    std::uint32_t pages = 0;
    std::uint32_t reads_in_flight = 0;
    std::uint32_t outstanding = 0;  // lookups, copies, cond-updates
  };
  struct GcContext {
    std::uint32_t victim;
    Dlpn dlpn;
    Dppn old_dppn;
    Dppn new_dppn = kUnmapped;  // the copy, for CondUpdate contexts
  };

  void start_collections();
  void issue_reads(std::uint32_t victim);
  void page_scanned(std::uint32_t victim, const nand::PageSnapshot& snap);
  void maybe_finish(std::uint32_t victim);

  EventEngine& engine_;
  BlockManager& bm_;
  MapUnit& map_;
  DataLayout layout_;
  FtlStats& stats_;
  GcConfig config_;

  std::map<std::uint32_t, Collection> active_;  // by victim block
  std::unordered_map<std::uint64_t, GcContext> contexts_;
  std::uint64_t next_tag_ = 1;
  double victim_valid_fraction_ = 0.0;
};

}  // namespace ssdsim::ftl
