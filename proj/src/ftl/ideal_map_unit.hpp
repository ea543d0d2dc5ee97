#pragma once

#include "ftl/flat_map.hpp"
#include "ftl/map_unit.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::ftl {

// Zero-cost map unit: the whole table lives in RAM and every request is
// answered in the same simulated instant. This is the "FTL execution time
// set to zero" baseline.
class IdealMapUnit : public MapUnit {
 public:
  IdealMapUnit(EventEngine& engine, std::size_t total_dlpns)
      : engine_(engine), map_(total_dlpns) {
    comp_ = engine_.register_component("map_unit");
  }

  void submit(MapRequest req) override {
    MapResponse resp = map_.apply(req);
    if (req.kind != MapOp::Lookup)
      observe_apply(req, resp.status == MapStatus::Ok);
    // Delivered through the event queue so callers never re-enter mid-call.
    engine_.schedule_in(0, comp_, [this, resp, origin = req.origin] {
      respond(resp, origin);
    });
  }

  void force_flush(std::function<void()> done) override {
    engine_.schedule_in(0, comp_, std::move(done));
  }

  std::vector<Dppn> reconstruct_map() const override { return map_.raw(); }

  const FlatMap& flat() const { return map_; }

 private:
  EventEngine& engine_;
  ComponentId comp_;
  FlatMap map_;
};

}  // namespace ssdsim::ftl
