#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "nand/flash_op.hpp"
#include "sim/busy_ledger.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::nand {

struct NandStats {
  std::array<std::uint64_t, 6> ops_by_kind{};  // indexed by FlashOpKind
  std::uint64_t read_bytes = 0;
  std::uint64_t program_bytes = 0;
  std::vector<std::uint64_t> channel_bytes;
  std::uint64_t endurance_warnings = 0;

  std::uint64_t reads() const {
    return ops_by_kind[0] + ops_by_kind[3];
  }
  std::uint64_t programs() const {
    return ops_by_kind[1] + ops_by_kind[4] + ops_by_kind[5];
  }
  std::uint64_t erases() const { return ops_by_kind[2]; }
};

// Chips hold one cell operation at a time; the chips of a channel share one
// data bus, FIFO by request arrival. Read data leaves the array at cell end,
// so a following cell operation may overlap the bus transfer; program data-in
// for the next queued operation may overlap the current cell the same way.
// Reads take priority over queued programs and erases at each chip, as
// controllers do to keep read latency off the program path.
class NandFlash {
 public:
  NandFlash(EventEngine& engine, BusyLedger& ledger, NandGeometry geometry,
            NandTiming timing, std::uint32_t oob_tags_per_page);

  void submit(FlashOperation op);

  // Pure whole-operation validation; submit() asserts this returns Ok
  // (EnduranceExceeded only counts a warning).
  Violation check_constraints(const FlashOperation& op) const;

  // Format-time metadata setup: programs a page instantly at t=0 without
  // consuming simulated time. Used to seed initial translation pages.
  void bootstrap_program(const PageAddress& addr, PageWrite write);

  const NandGeometry& geometry() const { return geometry_; }
  const NandTiming& timing() const { return timing_; }
  const BlockState& block_state(std::uint32_t block_index) const {
    return blocks_[block_index];
  }
  const BlockState& block_state(const PageAddress& a) const {
    return blocks_[geometry_.block_index(a)];
  }
  const NandStats& stats() const { return stats_; }

  ComponentId chip_component(std::uint32_t chip) const { return chip_comp_[chip]; }
  ComponentId bus_component(std::uint32_t channel) const { return bus_comp_[channel]; }

 private:
  struct PendingOp {
    FlashOperation op;
    bool data_in_started = false;
    bool data_in_done = false;
  };
  struct Chip {
    std::deque<PendingOp> read_queue;
    std::deque<PendingOp> write_queue;  // programs and erases
    bool cell_active = false;
  };
  struct BusRequest {
    std::uint64_t bytes;
    std::function<void()> on_done;
  };
  struct Channel {
    std::deque<BusRequest> queue;
    bool busy = false;
  };

  void reserve_program(const FlashOperation& op);
  void try_start(std::uint32_t chip_index);
  void on_cell_end(std::uint32_t chip_index, PendingOp pending, SimTime cell_start);
  void request_bus(std::uint32_t channel, std::uint64_t bytes, std::function<void()> cb);
  void try_bus(std::uint32_t channel);
  FlashResult snapshot_read(const FlashOperation& op) const;
  void apply_page_write(const PageAddress& addr, const PageWrite& write);

  EventEngine& engine_;
  BusyLedger& ledger_;
  NandGeometry geometry_;
  NandTiming timing_;
  std::uint32_t oob_tags_per_page_;

  std::vector<Chip> chips_;
  std::vector<Channel> channels_;
  std::vector<BlockState> blocks_;
  std::vector<ComponentId> chip_comp_;
  std::vector<ComponentId> bus_comp_;
  NandStats stats_;
};

}  // namespace ssdsim::nand
