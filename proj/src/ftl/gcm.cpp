#include "ftl/gcm.hpp"

namespace ssdsim::ftl {

using nand::FlashOpKind;
using nand::FlashOperation;
using nand::OobKind;

GarbageCollector::GarbageCollector(EventEngine& engine, BlockManager& bm, MapUnit& map,
                                   DataLayout layout, FtlStats& stats, GcConfig config)
    : engine_(engine), bm_(bm), map_(map), layout_(layout), stats_(stats),
      config_(config) {
  bm_.on_gc_needed = [this] { gc_needed(); };
  map_.set_response_handler(MapOrigin::Gcm,
                            [this](const MapResponse& r) { on_map_response(r); });
}

void GarbageCollector::gc_needed() { start_collections(); }

void GarbageCollector::start_collections() {
  while (!bm_.gc_satisfied() && active_.size() < config_.max_concurrent_collections) {
    auto victim = bm_.pick_gc_victim();
    if (!victim) return;
    const auto& g = bm_.nand().geometry();

    // A fully valid victim frees nothing; wait for invalidations instead of
    // copying a whole block in place.
    bool translation = bm_.block_use(*victim) == BlockUse::ClosedTranslation;
    std::uint32_t capacity = translation
                                 ? g.pages_per_block
                                 : g.pages_per_block * layout_.slots_per_page;
    if (bm_.valid_count(*victim) >= capacity) return;

    bm_.begin_collecting(*victim);
    stats_.gc_victims++;
    std::uint32_t slots_per_block = g.pages_per_block * layout_.slots_per_page;
    victim_valid_fraction_ =
        static_cast<double>(bm_.valid_count(*victim)) / slots_per_block;

    if (bm_.valid_count(*victim) == 0) {
      // Nothing live: erase without any page reads.
      bm_.erase_block(*victim, [this] {
        stats_.gc_erases++;
        start_collections();
      });
      continue;
    }

    Collection col;
    col.victim = *victim;
    col.pages = bm_.nand().block_state(*victim).next_program_page;
    active_[*victim] = col;
    issue_reads(*victim);
  }
}

void GarbageCollector::issue_reads(std::uint32_t victim) {
  auto it = active_.find(victim);
  if (it == active_.end()) return;
  Collection& col = it->second;
  const auto& g = bm_.nand().geometry();

  while (col.next_page < col.pages && col.reads_in_flight < config_.reads_in_flight) {
    std::uint32_t page = col.next_page++;
    col.reads_in_flight++;
    bm_.pin_block(victim);
    FlashOperation op;
    op.kind = FlashOpKind::ReadPage;
    op.targets = {g.address_of_ppn(victim * g.pages_per_block + page)};
    op.transfer_bytes = g.page_data_bytes;
    op.on_complete = [this, victim](nand::FlashResult&& result) {
      auto cit = active_.find(victim);
      SSDSIM_CHECK(cit != active_.end());
      Collection& c = cit->second;
      bm_.unpin_block(victim);
      c.reads_in_flight--;
      page_scanned(victim, result.pages.front());
      issue_reads(victim);
      maybe_finish(victim);
    };
    bm_.nand().submit(std::move(op));
  }
}

void GarbageCollector::page_scanned(std::uint32_t victim,
                                    const nand::PageSnapshot& snap) {
  Collection& col = active_.at(victim);
  const auto& g = bm_.nand().geometry();
  std::uint32_t ppn = g.ppn(snap.addr);

  if (snap.kind == OobKind::Data) {
    for (std::uint32_t slot = 0; slot < layout_.slots_per_page; ++slot) {
      Dlpn dlpn = snap.tags[slot];
      if (dlpn == kUnmapped) continue;
      // Page validity is decided by the mapping, not by the OOB alone.
      std::uint64_t tag = next_tag_++;
      contexts_[tag] = GcContext{victim, dlpn, layout_.dppn_of(ppn, slot)};
      col.outstanding++;
      stats_.map_lookups++;
      map_.submit(MapRequest{MapOp::Lookup, MapOrigin::Gcm, dlpn, kUnmapped,
                             kUnmapped, tag});
    }
  } else if (snap.kind == OobKind::Translation) {
    Tvpn tvpn = snap.tags[0];
    if (map_.gtd_lookup(tvpn) == ppn) {
      col.outstanding++;
      stats_.gc_copied_slots += layout_.slots_per_page;
      bm_.program_translation(tvpn, snap.payload, [this, victim, tvpn, ppn](Tppn fresh) {
        Collection& c = active_.at(victim);
        if (map_.gtd_relocate(tvpn, fresh, ppn)) {
          bm_.invalidate_translation(ppn);
        } else {
          // The map unit flushed a newer copy first; ours is stillborn.
          bm_.invalidate_translation(fresh);
        }
        c.outstanding--;
        maybe_finish(victim);
      });
    }
  }
}

void GarbageCollector::on_map_response(const MapResponse& resp) {
  auto it = contexts_.find(resp.tag);
  SSDSIM_CHECK(it != contexts_.end());
  GcContext ctx = it->second;
  contexts_.erase(it);
  Collection* col = active_.count(ctx.victim) ? &active_.at(ctx.victim) : nullptr;
  SSDSIM_CHECK(col != nullptr);

  if (resp.kind == MapOp::Lookup) {
    if (resp.status == MapStatus::Ok && resp.dppn == ctx.old_dppn) {
      // Still live: copy it, then conditionally repoint the mapping.
      stats_.gc_copied_slots++;
      bm_.program_data(ctx.dlpn, /*gc_write=*/true, [this, ctx](Dppn fresh) {
        std::uint64_t tag = next_tag_++;
        contexts_[tag] = GcContext{ctx.victim, ctx.dlpn, ctx.old_dppn, fresh};
        stats_.map_cond_updates++;
        map_.submit(MapRequest{MapOp::CondUpdate, MapOrigin::Gcm, ctx.dlpn, fresh,
                               ctx.old_dppn, tag});
      });
      return;  // outstanding stays up until the CondUpdate answers
    }
    col->outstanding--;
    maybe_finish(ctx.victim);
    return;
  }

  SSDSIM_CHECK(resp.kind == MapOp::CondUpdate);
  if (resp.status == MapStatus::Ok) {
    bm_.invalidate_slot(ctx.old_dppn);
  } else {
    // Host rewrote the page mid-copy; the fresh copy is dead on arrival and
    // the old slot was already invalidated by the host's own update.
    stats_.map_cond_stale++;
    bm_.invalidate_slot(ctx.new_dppn);
  }
  col->outstanding--;
  maybe_finish(ctx.victim);
}

void GarbageCollector::maybe_finish(std::uint32_t victim) {
  auto it = active_.find(victim);
  if (it == active_.end()) return;
  Collection& col = it->second;
  if (col.next_page < col.pages || col.reads_in_flight > 0 || col.outstanding > 0)
    return;
  active_.erase(it);
  // Hysteresis: keep collecting until the high watermark; start_collections
  // itself stops when satisfied or when only fully-valid victims remain.
  bm_.erase_block(victim, [this] {
    stats_.gc_erases++;
    start_collections();
  });
}

}  // namespace ssdsim::ftl
