#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "ftl/data_layout.hpp"
#include "ftl/stats.hpp"
#include "sim/busy_ledger.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::ftl {

struct HostCommand {
  std::uint64_t id = 0;
  bool is_write = false;
  std::uint64_t lba = 0;       // first sector
  std::uint32_t sectors = 1;   // NVMe-style limit of 65,536 sectors
  SimTime arrival = 0;
};

// One logical page of a chopped command.
struct SubRequest {
  std::uint64_t cmd_id = 0;
  Dlpn dlpn = 0;
  std::uint16_t sector_mask = 0;  // sectors of the logical page touched
  bool is_write = false;
};

// Splits a command into logical-page-sized sub-requests, order preserving,
// with partial sector masks at the edges.
std::vector<SubRequest> chop(const HostCommand& cmd, const DataLayout& layout);

// Serializes overlapping read/write page accesses in arrival order so the
// result always equals some sequential execution of the commands.
class DependencyChecker {
 public:
  // True: proceed immediately. False: pended; emitted later via on_release.
  bool admit(const SubRequest& sub);
  void complete(const SubRequest& sub);

  std::function<void(const SubRequest&)> on_release;

  bool idle() const { return pages_.empty(); }
  std::uint64_t pended_count() const { return pended_; }

 private:
  struct PageState {
    std::uint32_t active_readers = 0;
    bool active_writer = false;
    std::deque<SubRequest> waiters;
  };
  std::unordered_map<Dlpn, PageState> pages_;
  std::uint64_t pended_ = 0;
};

struct HostLinkConfig {
  std::uint64_t bandwidth_bytes_per_sec = 15'760'000'000;  // PCIe 3.0 x16 class
  std::uint32_t max_outstanding = 512;
  std::uint32_t max_sectors_per_command = 65536;
};

// HDL+HIL: admission control, host-link data transfers, request chopping,
// and dependency-cleared delivery to the HRM.
class HostInterface {
 public:
  using CompletionHandler = std::function<void(const HostCommand&)>;

  HostInterface(EventEngine& engine, BusyLedger& ledger, DataLayout layout,
                HostLinkConfig config, FtlStats& stats);

  void submit(HostCommand cmd, CompletionHandler on_complete);

  // HRM side.
  std::function<void(const SubRequest&)> deliver;
  void sub_request_complete(const SubRequest& sub);

  std::uint32_t outstanding() const { return outstanding_; }
  bool idle() const {
    return outstanding_ == 0 && admission_queue_.empty() && checker_.idle();
  }
  ComponentId link_component() const { return link_comp_; }
  const DependencyChecker& checker() const { return checker_; }

 private:
  struct ActiveCommand {
    HostCommand cmd;
    CompletionHandler on_complete;
    std::uint32_t pending_subs = 0;
  };

  void admit(HostCommand cmd, CompletionHandler on_complete);
  void dispatch(ActiveCommand& ac);
  void finish(std::uint64_t cmd_id);
  void link_transfer(std::uint64_t bytes, std::function<void()> done);
  void try_link();

  EventEngine& engine_;
  BusyLedger& ledger_;
  DataLayout layout_;
  HostLinkConfig config_;
  FtlStats& stats_;
  ComponentId link_comp_;
  DependencyChecker checker_;

  std::unordered_map<std::uint64_t, ActiveCommand> active_;
  std::deque<std::pair<HostCommand, CompletionHandler>> admission_queue_;
  std::uint32_t outstanding_ = 0;

  struct LinkJob {
    std::uint64_t bytes;
    std::function<void()> done;
  };
  std::deque<LinkJob> link_queue_;
  bool link_busy_ = false;
};

}  // namespace ssdsim::ftl
