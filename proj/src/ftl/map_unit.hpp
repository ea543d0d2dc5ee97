#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "ftl/map_packets.hpp"

namespace ssdsim::ftl {

// The packetized surface every map cache scheme sits behind; swapping the
// unit never touches HRM or GCM.
class MapUnit {
 public:
  using ResponseHandler = std::function<void(const MapResponse&)>;
  // Observes every accepted/rejected mapping change in apply order; test
  // mirrors hang off this.
  using ApplyObserver = std::function<void(const MapRequest&, bool applied)>;

  virtual ~MapUnit() = default;

  virtual void submit(MapRequest req) = 0;

  void set_response_handler(MapOrigin origin, ResponseHandler handler) {
    handlers_[static_cast<std::size_t>(origin)] = std::move(handler);
  }

  // Write every dirty mapping back to flash; `done` fires once the unit is
  // idle and the flash copy is current.
  virtual void force_flush(std::function<void()> done) = 0;

  // Flat view rebuilt from the durable structures (GTD + flashed translation
  // pages where they exist). Valid after force_flush.
  virtual std::vector<Dppn> reconstruct_map() const = 0;

  // Translation-block garbage collection: locate and relocate translation
  // pages without going through the data-path packet interface. Units that
  // keep no translation pages in flash never see these.
  virtual Tppn gtd_lookup(Tvpn) const { return kUnmapped; }
  virtual bool gtd_relocate(Tvpn, Tppn /*new_tppn*/, Tppn /*old_tppn*/) { return false; }

  virtual void dump(std::ostream&) const {}

  void set_apply_observer(ApplyObserver obs) { apply_observer_ = std::move(obs); }

 protected:
  void respond(const MapResponse& resp, MapOrigin origin) {
    auto& h = handlers_[static_cast<std::size_t>(origin)];
    if (h) h(resp);
  }
  void observe_apply(const MapRequest& req, bool applied) {
    if (apply_observer_) apply_observer_(req, applied);
  }

 private:
  ResponseHandler handlers_[2];
  ApplyObserver apply_observer_;
};

}  // namespace ssdsim::ftl
