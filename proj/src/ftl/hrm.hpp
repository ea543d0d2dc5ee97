#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ftl/block_manager.hpp"
#include "ftl/host_interface.hpp"
#include "ftl/map_unit.hpp"
#include "ftl/stats.hpp"

namespace ssdsim::ftl {

// Host Request Manager: reads resolve DLPN->DPPN through the map unit, then
// fetch from flash; writes program first and update the mapping after the
// page is durable. Read flash operations covering one NAND page coalesce,
// and aligned page pairs merge into multi-plane reads.
class HostRequestManager {
 public:
  HostRequestManager(EventEngine& engine, BlockManager& bm, MapUnit& map,
                     HostInterface& hil, DataLayout layout, FtlStats& stats);

  void accept(const SubRequest& sub);
  void on_map_response(const MapResponse& resp);

  bool idle() const { return contexts_.empty() && read_groups_.empty(); }

 private:
  struct ResolvedRead {
    SubRequest sub;
    Dppn dppn;
  };
  struct ReadGroup {
    std::vector<ResolvedRead> resolved;
    std::uint32_t pending_lookups = 0;
  };
  struct Context {
    SubRequest sub;
    bool is_lookup = false;
  };

  void issue_read_group(std::uint64_t cmd_id, ReadGroup& group);
  void issue_flash_read(std::vector<ResolvedRead> covered, bool multi_plane);

  EventEngine& engine_;
  BlockManager& bm_;
  MapUnit& map_;
  HostInterface& hil_;
  DataLayout layout_;
  FtlStats& stats_;

  std::unordered_map<std::uint64_t, Context> contexts_;  // by map tag
  std::unordered_map<std::uint64_t, ReadGroup> read_groups_;  // by cmd id
  std::uint64_t next_tag_ = 1;
};

}  // namespace ssdsim::ftl
