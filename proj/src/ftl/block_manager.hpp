#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "ftl/data_layout.hpp"
#include "ftl/map_packets.hpp"
#include "nand/nand_flash.hpp"

namespace ssdsim::ftl {

enum class BlockUse : std::uint8_t {
  Free,
  OpenData,
  OpenTranslation,
  ClosedData,
  ClosedTranslation,
  Collecting,  // GC owns it
  Erasing,
  Reserved,  // bootstrap pages (fixed-hit map area), never recycled
};

// How program requests are grouped into flash operations.
enum class ProgramBatching : std::uint8_t {
  None,               // one ProgramPage per NAND page
  MultiPlaneOneShot,  // planes x word-line group pages per operation
};

struct BlockManagerConfig {
  ProgramBatching batching = ProgramBatching::None;
  // How long a partially filled page buffer may wait for more slots before
  // being padded out. Must comfortably exceed the GC page-scan cadence
  // (t_read) or collections shred their own reclaim into padded pages.
  SimTime partial_page_window = 100'000;
  std::uint32_t gc_low_watermark = 2;   // global free blocks that trigger GC
  std::uint32_t gc_high_watermark = 5;  // collect until this many are free
  std::uint32_t host_reserve_blocks = 8;  // global free floor reserved for GC
};

// Manages flash blocks by valid-slot count: free/open/closed pools per plane,
// slot allocation round-robin across chips, victim selection, and erases.
class BlockManager {
 public:
  using SlotCallback = std::function<void(Dppn)>;       // fires when durable
  using PageCallback = std::function<void(std::uint32_t ppn)>;

  BlockManager(EventEngine& engine, nand::NandFlash& nand, DataLayout layout,
               BlockManagerConfig config);

  // Queues one logical page for programming. gc_write bypasses the host
  // reserve so collections always make progress. on_durable carries the
  // assigned DPPN after the flash program completes.
  void program_data(Dlpn dlpn, bool gc_write, SlotCallback on_durable);

  // Writes one whole translation page (payload = entries of the TVPN).
  void program_translation(Tvpn tvpn, nand::PagePayload payload, PageCallback on_durable);

  // Format-time variant: places the page instantly at t=0 and returns its PPN.
  std::uint32_t bootstrap_translation_page(Tvpn tvpn, nand::PagePayload payload);

  // Mapping no longer points at this slot / translation page.
  void invalidate_slot(Dppn dppn);
  void invalidate_translation(Tppn tppn);

  // Least-valid closed block device-wide; ties broken by lowest block index.
  std::optional<std::uint32_t> pick_gc_victim() const;

  // GC marks the victim while copying out of it.
  void begin_collecting(std::uint32_t block_index);
  void erase_block(std::uint32_t block_index, std::function<void()> on_erased);

  // In-flight reads hold a pin; erases wait for zero pins.
  void pin_block(std::uint32_t block_index) { meta_[block_index].pins++; }
  void unpin_block(std::uint32_t block_index);

  // Marks a bootstrapped page's block as reserved metadata space.
  void reserve_bootstrap_block(std::uint32_t block_index);

  std::uint32_t valid_count(std::uint32_t block_index) const {
    return meta_[block_index].valid;
  }
  BlockUse block_use(std::uint32_t block_index) const { return meta_[block_index].use; }
  std::uint32_t free_blocks_in_plane(std::uint32_t plane) const {
    return static_cast<std::uint32_t>(planes_[plane].free.size());
  }
  std::uint64_t total_free_blocks() const { return total_free_; }
  // Unwritten pages anywhere: free blocks plus the tails of open stripes.
  // Host admission works at this granularity so reclaim gains that land as
  // partial stripes still count.
  std::uint64_t free_pages() const { return free_pages_; }
  bool gc_needed() const { return total_free_ < config_.gc_low_watermark; }
  bool gc_satisfied() const { return total_free_ >= config_.gc_high_watermark; }
  std::uint64_t gc_trigger_count() const { return gc_trigger_count_; }
  bool has_pending_writes() const {
    return !pending_host_.empty() || !pending_gc_.empty();
  }

  // GCM hookup: invoked whenever the free pool dips below the GC watermark.
  std::function<void()> on_gc_needed;

  const DataLayout& layout() const { return layout_; }
  nand::NandFlash& nand() { return nand_; }

  // Flush any partially filled page buffers immediately (end of run).
  void drain_partial_pages();

  // Audit hook: recomputes valid counts from OOB tags via the supplied
  // mapping oracle and checks them against the live counters.
  void audit_valid_counts(const std::function<Dppn(Dlpn)>& mapped_to,
                          const std::function<Tppn(Tvpn)>& gtd) const;

 private:
  struct SlotRequest {
    Dlpn dlpn;
    SlotCallback on_durable;
  };
  struct PageBuffer {
    std::vector<SlotRequest> slots;
    bool flush_scheduled = false;
  };
  // One write position per chip and type: per-plane open blocks advance in
  // lockstep so multi-plane alignment holds for sequentially written data.
  struct WriteStripe {
    bool active = false;
    std::vector<std::uint32_t> block;  // per plane, kUnmapped if none
    std::uint32_t next_page = 0;
    std::uint32_t fill_plane = 0;
    PageBuffer buffer;
  };
  struct ReadyPage {
    nand::PageAddress addr;
    nand::PageWrite write;
    std::vector<SlotRequest> slots;  // data pages
    Tvpn tvpn = kUnmapped;           // translation pages
    PageCallback on_page_durable;
  };
  struct BlockMeta {
    BlockUse use = BlockUse::Free;
    std::uint32_t valid = 0;
    std::uint32_t pins = 0;
    bool erase_when_unpinned = false;
    std::function<void()> on_erased;
  };
  struct PlaneState {
    std::deque<std::uint32_t> free;  // block indices (global)
  };

  bool stripe_ensure(std::uint32_t chip, bool translation);
  bool advance_stripe(WriteStripe& s);
  void stripe_emit_page(std::uint32_t chip);
  void issue_ready_pages(std::uint32_t chip);
  void flush_chip_batch(std::uint32_t chip);
  void complete_pages(std::vector<ReadyPage> pages);
  bool try_place_data(SlotRequest& req);
  void admit_pending();
  void schedule_partial_flush(std::uint32_t chip);
  void close_stripe(std::uint32_t chip, bool translation);
  std::uint32_t plane_of_block(std::uint32_t block_index) const {
    return block_index / geometry().blocks_per_plane;
  }
  const nand::NandGeometry& geometry() const { return nand_.geometry(); }
  void check_gc();
  void maybe_erase(std::uint32_t block_index);

  EventEngine& engine_;
  nand::NandFlash& nand_;
  DataLayout layout_;
  BlockManagerConfig config_;
  ComponentId comp_;

  std::vector<PlaneState> planes_;
  std::vector<BlockMeta> meta_;
  std::vector<WriteStripe> data_stripes_;   // per chip
  std::vector<WriteStripe> trans_stripes_;  // per chip
  std::vector<std::vector<ReadyPage>> chip_batch_;  // pages awaiting batching
  bool host_admission_open() const {
    return free_pages_ > static_cast<std::uint64_t>(config_.host_reserve_blocks) *
                             geometry().pages_per_block;
  }

  std::deque<SlotRequest> pending_host_;  // host writes waiting for space
  std::deque<SlotRequest> pending_gc_;    // parked copies; drained before host
  std::uint64_t total_free_ = 0;
  std::uint64_t free_pages_ = 0;
  std::uint32_t data_cursor_ = 0;
  std::uint32_t trans_cursor_ = 0;
  std::uint64_t gc_trigger_count_ = 0;
};

}  // namespace ssdsim::ftl
