#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "ftl/translation_store.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::testing {

// Scripted translation backend: a GTD plus page payloads with fixed read and
// program latencies, no NAND underneath.
class MockBackend : public ftl::TranslationBackend {
 public:
  MockBackend(EventEngine& eng, std::uint32_t entries_per_page, std::uint32_t pages,
              SimTime read_latency = 35'000, SimTime write_latency = 390'000)
      : eng_(eng), epp_(entries_per_page), count_(pages),
        read_latency_(read_latency), write_latency_(write_latency) {
    comp_ = eng_.register_component("mock_flash");
    for (Tvpn t = 0; t < pages; ++t) {
      Tppn tppn = 44 + t;
      gtd_[t] = tppn;
      pages_[tppn] = std::vector<Dppn>(epp_, kUnmapped);
      next_tppn_ = std::max(next_tppn_, tppn + 1);
    }
  }

  std::uint32_t entries_per_page() const override { return epp_; }
  std::uint32_t page_count() const override { return count_; }
  Tppn gtd_lookup(Tvpn tvpn) const override { return gtd_.at(tvpn); }

  void read_page(Tvpn tvpn,
                 std::function<void(std::shared_ptr<const std::vector<Dppn>>)>
                     on_data) override {
    reads++;
    auto data = std::make_shared<const std::vector<Dppn>>(pages_.at(gtd_.at(tvpn)));
    eng_.schedule_in(read_latency_, comp_,
                     [cb = std::move(on_data), data] { cb(data); });
  }

  void write_page(Tvpn tvpn, std::shared_ptr<const std::vector<Dppn>> entries,
                  std::function<void(Tppn)> on_durable) override {
    programs++;
    eng_.schedule_in(write_latency_, comp_, [this, tvpn, entries,
                                             cb = std::move(on_durable)] {
      Tppn fresh = next_tppn_++;
      pages_[fresh] = *entries;
      gtd_[tvpn] = fresh;
      cb(fresh);
    });
  }

  bool relocate(Tvpn tvpn, Tppn new_tppn, Tppn old_tppn) override {
    if (gtd_.at(tvpn) != old_tppn) return false;
    gtd_[tvpn] = new_tppn;
    return true;
  }

  std::vector<Dppn> read_page_now(Tvpn tvpn) const override {
    return pages_.at(gtd_.at(tvpn));
  }

  std::uint64_t reads = 0;
  std::uint64_t programs = 0;

 private:
  EventEngine& eng_;
  std::uint32_t epp_;
  std::uint32_t count_;
  SimTime read_latency_;
  SimTime write_latency_;
  ComponentId comp_;
  std::map<Tvpn, Tppn> gtd_;
  std::map<Tppn, std::vector<Dppn>> pages_;
  Tppn next_tppn_ = 0;
};


}  // namespace ssdsim::testing
