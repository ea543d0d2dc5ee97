#pragma once

#include <vector>

#include "common/types.hpp"
#include "ftl/map_packets.hpp"

namespace ssdsim::ftl {

// Flat DLPN -> DPPN table with the packet semantics. Backs the ideal map
// unit and serves as the reference model in equivalence tests.
class FlatMap {
 public:
  explicit FlatMap(std::size_t total_dlpns) : map_(total_dlpns, kUnmapped) {}

  Dppn lookup(Dlpn dlpn) const { return map_[dlpn]; }

  // Returns the previous mapping.
  Dppn update(Dlpn dlpn, Dppn dppn) {
    Dppn prev = map_[dlpn];
    map_[dlpn] = dppn;
    return prev;
  }

  // Applied only if the mapping still points at old_dppn.
  bool cond_update(Dlpn dlpn, Dppn new_dppn, Dppn old_dppn) {
    if (map_[dlpn] != old_dppn) return false;
    map_[dlpn] = new_dppn;
    return true;
  }

  // Applies a request; fills response status/dppn fields.
  MapResponse apply(const MapRequest& req) {
    MapResponse resp;
    resp.tag = req.tag;
    resp.dlpn = req.dlpn;
    resp.kind = req.kind;
    switch (req.kind) {
      case MapOp::Lookup:
        resp.dppn = lookup(req.dlpn);
        resp.status = resp.dppn == kUnmapped ? MapStatus::Unmapped : MapStatus::Ok;
        break;
      case MapOp::Update:
        resp.prev_dppn = update(req.dlpn, req.new_dppn);
        resp.dppn = req.new_dppn;
        resp.status = MapStatus::Ok;
        break;
      case MapOp::CondUpdate:
        if (cond_update(req.dlpn, req.new_dppn, req.old_dppn)) {
          resp.dppn = req.new_dppn;
          resp.prev_dppn = req.old_dppn;
          resp.status = MapStatus::Ok;
        } else {
          resp.dppn = lookup(req.dlpn);
          resp.status = MapStatus::Stale;
        }
        break;
    }
    return resp;
  }

  std::size_t size() const { return map_.size(); }
  const std::vector<Dppn>& raw() const { return map_; }

 private:
  std::vector<Dppn> map_;
};

}  // namespace ssdsim::ftl
