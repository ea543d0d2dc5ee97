#pragma once

#include <deque>

#include "common/rng.hpp"
#include "ftl/flat_map.hpp"
#include "ftl/map_unit.hpp"
#include "nand/nand_flash.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::ftl {

// Synthetic map unit for bottleneck studies: a single serial server with a
// configured service time and a configured hit ratio. A miss adds one real
// flash read of a reserved map page (drawn from a seeded RNG) before the
// response, mirroring the two-leg miss timeline. Mapping state itself stays
// in a flat RAM table, so correctness is unaffected by the hit ratio.
class FixedHitMapUnit : public MapUnit {
 public:
  struct Config {
    SimTime service_ns = us(1);  // T_FTL_map + T_FTL_cmd per request
    double hit_ratio = 1.0;
    std::uint64_t seed = 1;
    std::uint64_t miss_transfer_bytes = 4096;
  };

  FixedHitMapUnit(EventEngine& engine, nand::NandFlash& nand, std::size_t total_dlpns,
                  Config config, std::vector<nand::PageAddress> map_pages)
      : engine_(engine),
        nand_(nand),
        map_(total_dlpns),
        config_(config),
        map_pages_(std::move(map_pages)),
        rng_(config.seed) {
    comp_ = engine_.register_component("map_unit");
  }

  void submit(MapRequest req) override {
    queue_.push_back(req);
    kick();
  }

  void force_flush(std::function<void()> done) override {
    drain_done_ = std::move(done);
    maybe_drained();
  }

  std::vector<Dppn> reconstruct_map() const override { return map_.raw(); }

  ComponentId component() const { return comp_; }

 private:
  void kick() {
    if (busy_ || queue_.empty()) return;
    busy_ = true;
    MapRequest req = queue_.front();
    queue_.pop_front();
    SimTime start = engine_.now();
    engine_.schedule_in(config_.service_ns, comp_, [this, req, start] {
      ledger_mark(start);
      MapResponse resp = map_.apply(req);
      if (req.kind != MapOp::Lookup)
        observe_apply(req, resp.status == MapStatus::Ok);
      bool hit = rng_.unit() < config_.hit_ratio;
      if (hit || map_pages_.empty()) {
        respond(resp, req.origin);
      } else {
        // One translation-page read stands between the unit and the answer.
        outstanding_misses_++;
        nand::FlashOperation op;
        op.kind = nand::FlashOpKind::ReadPage;
        op.targets = {map_pages_[rng_.below(map_pages_.size())]};
        op.transfer_bytes = config_.miss_transfer_bytes;
        op.on_complete = [this, resp, origin = req.origin](nand::FlashResult&&) {
          outstanding_misses_--;
          respond(resp, origin);
          maybe_drained();
        };
        nand_.submit(std::move(op));
      }
      busy_ = false;
      kick();
      maybe_drained();
    });
  }

  void ledger_mark(SimTime start) {
    if (ledger_) ledger_->mark_busy(comp_, start, engine_.now());
  }

  void maybe_drained() {
    if (drain_done_ && !busy_ && queue_.empty() && outstanding_misses_ == 0) {
      auto done = std::move(drain_done_);
      drain_done_ = nullptr;
      engine_.schedule_in(0, comp_, std::move(done));
    }
  }

 public:
  void attach_ledger(BusyLedger* ledger) { ledger_ = ledger; }

 private:
  EventEngine& engine_;
  nand::NandFlash& nand_;
  FlatMap map_;
  Config config_;
  std::vector<nand::PageAddress> map_pages_;
  Rng rng_;
  ComponentId comp_;
  BusyLedger* ledger_ = nullptr;

  std::deque<MapRequest> queue_;
  bool busy_ = false;
  std::uint32_t outstanding_misses_ = 0;
  std::function<void()> drain_done_;
};

}  // namespace ssdsim::ftl
