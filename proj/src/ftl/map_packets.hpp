#pragma once

#include <cstdint>

#include "common/types.hpp"

namespace ssdsim::ftl {

enum class MapOp : std::uint8_t { Lookup, Update, CondUpdate };
enum class MapOrigin : std::uint8_t { Hrm, Gcm };

// One packet of map traffic between HRM/GCM and the map cache unit.
struct MapRequest {
  MapOp kind = MapOp::Lookup;
  MapOrigin origin = MapOrigin::Hrm;
  Dlpn dlpn = 0;
  Dppn new_dppn = kUnmapped;  // Update / CondUpdate
  Dppn old_dppn = kUnmapped;  // CondUpdate carries the expected old mapping
  std::uint64_t tag = 0;
};

enum class MapStatus : std::uint8_t {
  Ok,
  Unmapped,  // Lookup of a never-written DLPN
  Stale,     // CondUpdate whose old_dppn no longer matches
};

struct MapResponse {
  std::uint64_t tag = 0;
  Dlpn dlpn = 0;
  MapOp kind = MapOp::Lookup;
  MapStatus status = MapStatus::Ok;
  Dppn dppn = kUnmapped;       // Lookup: current mapping; updates: the new one
  Dppn prev_dppn = kUnmapped;  // Update: mapping it replaced (for invalidation)
};

}  // namespace ssdsim::ftl
