#include "ftl/block_manager.hpp"

#include <algorithm>

namespace ssdsim::ftl {

using nand::FlashOpKind;
using nand::FlashOperation;
using nand::OobKind;
using nand::PageAddress;
using nand::PageWrite;

BlockManager::BlockManager(EventEngine& engine, nand::NandFlash& nand, DataLayout layout,
                           BlockManagerConfig config)
    : engine_(engine), nand_(nand), layout_(layout), config_(config) {
  comp_ = engine_.register_component("bm");
  const auto& g = geometry();
  planes_.resize(g.plane_count());
  meta_.resize(g.block_count());
  data_stripes_.resize(g.chip_count());
  trans_stripes_.resize(g.chip_count());
  chip_batch_.resize(g.chip_count());
  for (auto& s : data_stripes_) s.block.assign(g.planes_per_chip, kUnmapped);
  for (auto& s : trans_stripes_) s.block.assign(g.planes_per_chip, kUnmapped);
  for (std::uint32_t b = 0; b < g.block_count(); ++b)
    planes_[plane_of_block(b)].free.push_back(b);
  total_free_ = g.block_count();
  free_pages_ = static_cast<std::uint64_t>(g.block_count()) * g.pages_per_block;
}

void BlockManager::reserve_bootstrap_block(std::uint32_t block_index) {
  BlockMeta& m = meta_[block_index];
  if (m.use == BlockUse::Reserved) return;
  SSDSIM_CHECK(m.use == BlockUse::Free);
  auto& free = planes_[plane_of_block(block_index)].free;
  auto it = std::find(free.begin(), free.end(), block_index);
  SSDSIM_CHECK(it != free.end());
  free.erase(it);
  total_free_--;
  free_pages_ -= geometry().pages_per_block;
  m.use = BlockUse::Reserved;
}

bool BlockManager::stripe_ensure(std::uint32_t chip, bool translation) {
  WriteStripe& s = translation ? trans_stripes_[chip] : data_stripes_[chip];
  if (s.active) return true;
  const auto& g = geometry();
  bool any = false;
  for (std::uint32_t p = 0; p < g.planes_per_chip; ++p) {
    std::uint32_t plane = chip * g.planes_per_chip + p;
    auto& free = planes_[plane].free;
    if (free.empty()) {
      s.block[p] = kUnmapped;
      continue;
    }
    std::uint32_t b = free.front();
    free.pop_front();
    total_free_--;
    meta_[b].use = translation ? BlockUse::OpenTranslation : BlockUse::OpenData;
    s.block[p] = b;
    any = true;
  }
  if (!any) return false;
  s.active = true;
  s.next_page = 0;
  s.fill_plane = 0;
  while (s.block[s.fill_plane] == kUnmapped) s.fill_plane++;
  check_gc();  // the free pool just shrank
  return true;
}

void BlockManager::close_stripe(std::uint32_t chip, bool translation) {
  WriteStripe& s = translation ? trans_stripes_[chip] : data_stripes_[chip];
  for (std::uint32_t p = 0; p < geometry().planes_per_chip; ++p) {
    if (s.block[p] == kUnmapped) continue;
    meta_[s.block[p]].use =
        translation ? BlockUse::ClosedTranslation : BlockUse::ClosedData;
    s.block[p] = kUnmapped;
  }
  s.active = false;
}

// Moves to the next active plane at the same page index, wrapping to the next
// page row once every active plane has been filled. Returns true on wrap.
bool BlockManager::advance_stripe(WriteStripe& s) {
  const auto& g = geometry();
  for (std::uint32_t p = s.fill_plane + 1; p < g.planes_per_chip; ++p) {
    if (s.block[p] != kUnmapped) {
      s.fill_plane = p;
      return false;
    }
  }
  s.next_page++;
  s.fill_plane = 0;
  while (s.fill_plane < g.planes_per_chip && s.block[s.fill_plane] == kUnmapped)
    s.fill_plane++;
  SSDSIM_CHECK(s.fill_plane < g.planes_per_chip);
  return true;
}

void BlockManager::stripe_emit_page(std::uint32_t chip) {
  const auto& g = geometry();
  WriteStripe& s = data_stripes_[chip];
  SSDSIM_CHECK(s.active && !s.buffer.slots.empty());
  std::uint32_t global_block = s.block[s.fill_plane];

  ReadyPage page;
  page.addr = PageAddress{chip / g.ways_per_channel, chip % g.ways_per_channel,
                          s.fill_plane, global_block % g.blocks_per_plane, s.next_page};
  page.write.kind = OobKind::Data;
  page.write.tags.assign(layout_.slots_per_page, kUnmapped);
  for (std::size_t i = 0; i < s.buffer.slots.size(); ++i)
    page.write.tags[i] = s.buffer.slots[i].dlpn;
  page.slots = std::move(s.buffer.slots);
  s.buffer.slots.clear();
  s.buffer.flush_scheduled = false;
  meta_[global_block].valid += static_cast<std::uint32_t>(page.slots.size());
  free_pages_--;
  chip_batch_[chip].push_back(std::move(page));

  bool wrapped = advance_stripe(s);
  if (wrapped) data_cursor_ = (chip + 1) % g.chip_count();
  if (s.next_page == g.pages_per_block) close_stripe(chip, false);

  issue_ready_pages(chip);
}

void BlockManager::complete_pages(std::vector<ReadyPage> pages) {
  for (auto& p : pages) {
    std::uint32_t ppn = geometry().ppn(p.addr);
    for (std::size_t i = 0; i < p.slots.size(); ++i)
      p.slots[i].on_durable(layout_.dppn_of(ppn, static_cast<std::uint32_t>(i)));
    if (p.on_page_durable) p.on_page_durable(ppn);
  }
  admit_pending();
}

void BlockManager::issue_ready_pages(std::uint32_t chip) {
  auto& batch = chip_batch_[chip];
  if (batch.empty()) return;
  const auto& g = geometry();
  const auto& t = nand_.timing();

  if (config_.batching == ProgramBatching::MultiPlaneOneShot) {
    std::uint32_t group = t.wordline_group_size * g.planes_per_chip;
    if (batch.size() < group) return;  // wait for a full group (or a timeout)
    FlashOperation op;
    op.kind = FlashOpKind::OneShotProgram;
    for (std::uint32_t i = 0; i < group; ++i) {
      op.targets.push_back(batch[i].addr);
      op.writes.push_back(batch[i].write);
    }
    op.transfer_bytes = static_cast<std::uint64_t>(group) * g.page_data_bytes;
    if (nand_.check_constraints(op) == nand::Violation::Ok) {
      std::vector<ReadyPage> pages(std::make_move_iterator(batch.begin()),
                                   std::make_move_iterator(batch.begin() + group));
      batch.erase(batch.begin(), batch.begin() + group);
      op.on_complete = [this, pages = std::move(pages)](nand::FlashResult&&) mutable {
        complete_pages(std::move(pages));
      };
      nand_.submit(std::move(op));
      return;
    }
    // Shape is off (plane gaps, block misalignment); drain as plain pages.
  }
  flush_chip_batch(chip);
}

void BlockManager::flush_chip_batch(std::uint32_t chip) {
  auto& batch = chip_batch_[chip];
  while (!batch.empty()) {
    ReadyPage page = std::move(batch.front());
    batch.erase(batch.begin());
    FlashOperation op;
    op.kind = FlashOpKind::ProgramPage;
    op.targets = {page.addr};
    op.transfer_bytes = geometry().page_data_bytes;
    op.writes = {page.write};
    op.on_complete = [this, page = std::move(page)](nand::FlashResult&&) mutable {
      std::vector<ReadyPage> one;
      one.push_back(std::move(page));
      complete_pages(std::move(one));
    };
    nand_.submit(std::move(op));
  }
}

void BlockManager::schedule_partial_flush(std::uint32_t chip) {
  WriteStripe& s = data_stripes_[chip];
  if (s.buffer.flush_scheduled) return;
  s.buffer.flush_scheduled = true;
  std::size_t expected = s.buffer.slots.size();
  engine_.schedule_in(config_.partial_page_window, comp_, [this, chip, expected] {
    WriteStripe& st = data_stripes_[chip];
    if (!st.buffer.flush_scheduled) return;
    st.buffer.flush_scheduled = false;
    if (st.buffer.slots.empty()) return;
    if (st.buffer.slots.size() != expected) {
      schedule_partial_flush(chip);
      return;
    }
    stripe_emit_page(chip);
    flush_chip_batch(chip);
  });
}

bool BlockManager::try_place_data(SlotRequest& req) {
  const auto& g = geometry();
  for (std::uint32_t tries = 0; tries < g.chip_count(); ++tries) {
    std::uint32_t chip = (data_cursor_ + tries) % g.chip_count();
    if (!stripe_ensure(chip, false)) continue;
    if (tries > 0) data_cursor_ = chip;
    WriteStripe& s = data_stripes_[chip];
    s.buffer.slots.push_back(std::move(req));
    if (s.buffer.slots.size() == layout_.slots_per_page) {
      s.buffer.flush_scheduled = false;
      stripe_emit_page(chip);
    } else {
      schedule_partial_flush(chip);
    }
    return true;
  }
  return false;
}

void BlockManager::program_data(Dlpn dlpn, bool gc_write, SlotCallback on_durable) {
  SlotRequest req{dlpn, std::move(on_durable)};
  if (gc_write) {
    // Copies bypass the host reserve; when even that space is gone they park
    // until an erase or program completion frees room.
    if (pending_gc_.empty() && try_place_data(req)) return;
    pending_gc_.push_back(std::move(req));
    return;
  }
  if (!pending_host_.empty() || !host_admission_open() || !try_place_data(req)) {
    bool first_park = pending_host_.empty();
    pending_host_.push_back(std::move(req));
    if (first_park) check_gc();  // writers now wait on reclaim
  }
}

void BlockManager::admit_pending() {
  while (!pending_gc_.empty()) {
    SlotRequest req = std::move(pending_gc_.front());
    pending_gc_.pop_front();
    if (!try_place_data(req)) {
      pending_gc_.push_front(std::move(req));
      return;  // space is gone again; host writes cannot jump the queue
    }
  }
  while (!pending_host_.empty() && host_admission_open()) {
    SlotRequest req = std::move(pending_host_.front());
    pending_host_.pop_front();
    if (!try_place_data(req)) {
      pending_host_.push_front(std::move(req));
      break;
    }
  }
}

void BlockManager::program_translation(Tvpn tvpn, nand::PagePayload payload,
                                       PageCallback on_durable) {
  const auto& g = geometry();
  for (std::uint32_t tries = 0; tries < g.chip_count(); ++tries) {
    std::uint32_t chip = (trans_cursor_ + tries) % g.chip_count();
    if (!stripe_ensure(chip, true)) continue;
    trans_cursor_ = (chip + 1) % g.chip_count();
    WriteStripe& s = trans_stripes_[chip];
    std::uint32_t global_block = s.block[s.fill_plane];

    PageAddress addr{chip / g.ways_per_channel, chip % g.ways_per_channel,
                     s.fill_plane, global_block % g.blocks_per_plane, s.next_page};
    meta_[global_block].valid += 1;
    free_pages_--;

    FlashOperation op;
    op.kind = FlashOpKind::ProgramPage;
    op.targets = {addr};
    op.transfer_bytes = g.page_data_bytes;
    op.writes = {PageWrite{OobKind::Translation, {tvpn}, std::move(payload)}};
    op.on_complete = [this, cb = std::move(on_durable),
                      ppn = g.ppn(addr)](nand::FlashResult&&) {
      if (cb) cb(ppn);
      admit_pending();
    };
    nand_.submit(std::move(op));

    advance_stripe(s);
    if (s.next_page == g.pages_per_block) close_stripe(chip, true);
    return;
  }
  SSDSIM_CHECK_MSG(false, "CapacityExhausted: no free blocks for translation pages");
}

std::uint32_t BlockManager::bootstrap_translation_page(Tvpn tvpn,
                                                       nand::PagePayload payload) {
  const auto& g = geometry();
  for (std::uint32_t tries = 0; tries < g.chip_count(); ++tries) {
    std::uint32_t chip = (trans_cursor_ + tries) % g.chip_count();
    if (!stripe_ensure(chip, true)) continue;
    trans_cursor_ = (chip + 1) % g.chip_count();
    WriteStripe& s = trans_stripes_[chip];
    std::uint32_t global_block = s.block[s.fill_plane];
    PageAddress addr{chip / g.ways_per_channel, chip % g.ways_per_channel,
                     s.fill_plane, global_block % g.blocks_per_plane, s.next_page};
    meta_[global_block].valid += 1;
    free_pages_--;
    nand_.bootstrap_program(
        addr, PageWrite{OobKind::Translation, {tvpn}, std::move(payload)});
    advance_stripe(s);
    if (s.next_page == g.pages_per_block) close_stripe(chip, true);
    return g.ppn(addr);
  }
  SSDSIM_CHECK_MSG(false, "CapacityExhausted during format");
  return kUnmapped;
}

void BlockManager::invalidate_slot(Dppn dppn) {
  std::uint32_t block = layout_.ppn_of(dppn) / geometry().pages_per_block;
  SSDSIM_CHECK(meta_[block].valid > 0);
  meta_[block].valid--;
  // GC may have been waiting for exactly this invalidation.
  check_gc();
}

void BlockManager::invalidate_translation(Tppn tppn) {
  std::uint32_t block = tppn / geometry().pages_per_block;
  SSDSIM_CHECK(meta_[block].valid > 0);
  meta_[block].valid--;
  check_gc();
}

std::optional<std::uint32_t> BlockManager::pick_gc_victim() const {
  std::optional<std::uint32_t> best;
  for (std::uint32_t b = 0; b < geometry().block_count(); ++b) {
    BlockUse use = meta_[b].use;
    if (use != BlockUse::ClosedData && use != BlockUse::ClosedTranslation) continue;
    if (!best || meta_[b].valid < meta_[*best].valid) best = b;
  }
  return best;
}

void BlockManager::begin_collecting(std::uint32_t block_index) {
  BlockMeta& m = meta_[block_index];
  SSDSIM_CHECK(m.use == BlockUse::ClosedData || m.use == BlockUse::ClosedTranslation);
  m.use = BlockUse::Collecting;
}

void BlockManager::erase_block(std::uint32_t block_index, std::function<void()> on_erased) {
  BlockMeta& m = meta_[block_index];
  SSDSIM_CHECK(m.use == BlockUse::Collecting || m.use == BlockUse::ClosedData ||
               m.use == BlockUse::ClosedTranslation);
  m.use = BlockUse::Erasing;
  m.on_erased = std::move(on_erased);
  maybe_erase(block_index);
}

void BlockManager::maybe_erase(std::uint32_t block_index) {
  BlockMeta& m = meta_[block_index];
  if (m.use != BlockUse::Erasing) return;
  if (m.pins > 0) {
    m.erase_when_unpinned = true;
    return;
  }
  m.erase_when_unpinned = false;
  const auto& g = geometry();
  FlashOperation op;
  op.kind = FlashOpKind::EraseBlock;
  op.targets = {g.address_of_ppn(block_index * g.pages_per_block)};
  op.on_complete = [this, block_index](nand::FlashResult&&) {
    BlockMeta& meta = meta_[block_index];
    meta.use = BlockUse::Free;
    meta.valid = 0;
    planes_[plane_of_block(block_index)].free.push_back(block_index);
    total_free_++;
    free_pages_ += geometry().pages_per_block;
    auto cb = std::move(meta.on_erased);
    meta.on_erased = nullptr;
    admit_pending();
    if (cb) cb();
  };
  nand_.submit(std::move(op));
}

void BlockManager::unpin_block(std::uint32_t block_index) {
  BlockMeta& m = meta_[block_index];
  SSDSIM_CHECK(m.pins > 0);
  m.pins--;
  if (m.pins == 0 && m.erase_when_unpinned) maybe_erase(block_index);
}

void BlockManager::check_gc() {
  if (gc_needed()) {
    gc_trigger_count_++;
    if (on_gc_needed) on_gc_needed();
  }
}

void BlockManager::drain_partial_pages() {
  const auto& g = geometry();
  for (std::uint32_t chip = 0; chip < g.chip_count(); ++chip) {
    WriteStripe& s = data_stripes_[chip];
    if (s.active && !s.buffer.slots.empty()) {
      s.buffer.flush_scheduled = false;
      stripe_emit_page(chip);
    }
    flush_chip_batch(chip);
  }
}

void BlockManager::audit_valid_counts(const std::function<Dppn(Dlpn)>& mapped_to,
                                      const std::function<Tppn(Tvpn)>& gtd) const {
  const auto& g = geometry();
  for (std::uint32_t b = 0; b < g.block_count(); ++b) {
    BlockUse use = meta_[b].use;
    if (use == BlockUse::Free || use == BlockUse::Erasing || use == BlockUse::Reserved)
      continue;
    const nand::BlockState& st = nand_.block_state(b);
    std::uint32_t live = 0;
    if (!st.oob.empty()) {
      for (std::uint32_t page = 0; page < st.next_program_page; ++page) {
        std::uint32_t ppn = b * g.pages_per_block + page;
        if (st.oob_kind[page] == OobKind::Data) {
          for (std::uint32_t slot = 0; slot < layout_.slots_per_page; ++slot) {
            Dlpn dlpn =
                st.oob[static_cast<std::size_t>(page) * layout_.slots_per_page + slot];
            if (dlpn == kUnmapped) continue;
            if (mapped_to(dlpn) == layout_.dppn_of(ppn, slot)) live++;
          }
        } else if (st.oob_kind[page] == OobKind::Translation) {
          Tvpn tvpn = st.oob[static_cast<std::size_t>(page) * layout_.slots_per_page];
          if (gtd && gtd(tvpn) == ppn) live++;
        }
      }
    }
    SSDSIM_CHECK_MSG(live == meta_[b].valid,
                     "valid-count drift on block " << b << ": counted " << live
                                                   << " ledger " << meta_[b].valid);
  }
}

}  // namespace ssdsim::ftl
