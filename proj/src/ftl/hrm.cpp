#include "ftl/hrm.hpp"

#include <algorithm>
#include <bit>

namespace ssdsim::ftl {

using nand::FlashOpKind;
using nand::FlashOperation;

HostRequestManager::HostRequestManager(EventEngine& engine, BlockManager& bm,
                                       MapUnit& map, HostInterface& hil,
                                       DataLayout layout, FtlStats& stats)
    : engine_(engine), bm_(bm), map_(map), hil_(hil), layout_(layout), stats_(stats) {
  hil_.deliver = [this](const SubRequest& sub) { accept(sub); };
  map_.set_response_handler(MapOrigin::Hrm,
                            [this](const MapResponse& r) { on_map_response(r); });
}

void HostRequestManager::accept(const SubRequest& sub) {
  if (sub.is_write) {
    bm_.program_data(sub.dlpn, /*gc_write=*/false, [this, sub](Dppn dppn) {
      std::uint64_t tag = next_tag_++;
      contexts_[tag] = Context{sub, false};
      stats_.map_updates++;
      map_.submit(MapRequest{MapOp::Update, MapOrigin::Hrm, sub.dlpn, dppn,
                             kUnmapped, tag});
    });
    return;
  }
  std::uint64_t tag = next_tag_++;
  contexts_[tag] = Context{sub, true};
  read_groups_[sub.cmd_id].pending_lookups++;
  stats_.map_lookups++;
  map_.submit(MapRequest{MapOp::Lookup, MapOrigin::Hrm, sub.dlpn, kUnmapped,
                         kUnmapped, tag});
}

void HostRequestManager::on_map_response(const MapResponse& resp) {
  auto it = contexts_.find(resp.tag);
  SSDSIM_CHECK(it != contexts_.end());
  Context ctx = std::move(it->second);
  contexts_.erase(it);

  if (!ctx.is_lookup) {
    // Write path: mapping updated; retire the replaced slot.
    SSDSIM_CHECK(resp.status == MapStatus::Ok);
    if (resp.prev_dppn != kUnmapped) bm_.invalidate_slot(resp.prev_dppn);
    stats_.host_written_slots++;
    hil_.sub_request_complete(ctx.sub);
    return;
  }

  auto git = read_groups_.find(ctx.sub.cmd_id);
  SSDSIM_CHECK(git != read_groups_.end());
  ReadGroup& group = git->second;
  if (resp.status == MapStatus::Unmapped) {
    // Never written: host sees zeros, no flash traffic.
    hil_.sub_request_complete(ctx.sub);
  } else {
    group.resolved.push_back(ResolvedRead{ctx.sub, resp.dppn});
  }
  if (--group.pending_lookups == 0) {
    ReadGroup ready = std::move(group);
    read_groups_.erase(git);
    issue_read_group(ctx.sub.cmd_id, ready);
  }
}

void HostRequestManager::issue_read_group(std::uint64_t, ReadGroup& group) {
  if (group.resolved.empty()) return;
  // Group by physical NAND page so slots fetched together cost one read.
  std::sort(group.resolved.begin(), group.resolved.end(),
            [](const ResolvedRead& a, const ResolvedRead& b) {
              return a.dppn < b.dppn;
            });
  struct PageGroup {
    std::uint32_t ppn;
    std::vector<ResolvedRead> covered;
  };
  std::vector<PageGroup> pages;
  for (auto& rr : group.resolved) {
    std::uint32_t ppn = layout_.ppn_of(rr.dppn);
    if (pages.empty() || pages.back().ppn != ppn)
      pages.push_back(PageGroup{ppn, {}});
    pages.back().covered.push_back(std::move(rr));
  }

  // Merge aligned plane pairs (same chip/block/page offset) into one
  // multi-plane read.
  const auto& g = bm_.nand().geometry();
  std::vector<bool> used(pages.size(), false);
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    auto ai = g.address_of_ppn(pages[i].ppn);
    std::vector<ResolvedRead> covered = std::move(pages[i].covered);
    bool multi = false;
    for (std::size_t j = i + 1; j < pages.size() && g.planes_per_chip > 1; ++j) {
      if (used[j]) continue;
      auto aj = g.address_of_ppn(pages[j].ppn);
      if (aj.channel == ai.channel && aj.way == ai.way && aj.block == ai.block &&
          aj.page == ai.page && aj.plane != ai.plane) {
        used[j] = true;
        multi = true;
        for (auto& rr : pages[j].covered) covered.push_back(std::move(rr));
        break;  // at most a pair on two-plane chips
      }
    }
    issue_flash_read(std::move(covered), multi);
  }
}

void HostRequestManager::issue_flash_read(std::vector<ResolvedRead> covered,
                                          bool multi_plane) {
  const auto& g = bm_.nand().geometry();
  FlashOperation op;
  op.kind = multi_plane ? FlashOpKind::MultiPlaneRead : FlashOpKind::ReadPage;
  std::uint64_t bytes = 0;
  std::vector<std::uint32_t> pinned;
  for (const auto& rr : covered) {
    std::uint32_t ppn = layout_.ppn_of(rr.dppn);
    auto addr = g.address_of_ppn(ppn);
    if (std::find_if(op.targets.begin(), op.targets.end(),
                     [&](const nand::PageAddress& a) { return a == addr; }) ==
        op.targets.end()) {
      op.targets.push_back(addr);
      std::uint32_t block = g.block_index(addr);
      bm_.pin_block(block);
      pinned.push_back(block);
    }
    // Sub-page host reads transfer only the requested sectors.
    bytes += static_cast<std::uint64_t>(std::popcount(rr.sub.sector_mask)) *
             layout_.sector_bytes;
  }
  op.transfer_bytes = bytes;
  op.on_complete = [this, covered = std::move(covered),
                    pinned = std::move(pinned)](nand::FlashResult&&) {
    for (std::uint32_t block : pinned) bm_.unpin_block(block);
    for (const auto& rr : covered) hil_.sub_request_complete(rr.sub);
  };
  bm_.nand().submit(std::move(op));
}

}  // namespace ssdsim::ftl
