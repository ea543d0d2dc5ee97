#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "ftl/block_manager.hpp"

namespace ssdsim::ftl {

// The flash half of a demand-paged mapping table: where every translation
// page lives (loads, flushes, GC relocation) plus the RAM directory locating
// them. Map cache units differ in what they keep in RAM, not in this.
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;

  virtual std::uint32_t entries_per_page() const = 0;
  virtual std::uint32_t page_count() const = 0;  // number of TVPNs

  virtual Tppn gtd_lookup(Tvpn tvpn) const = 0;

  // Flash read of the page behind `tvpn`; the payload is its entry array.
  virtual void read_page(Tvpn tvpn,
                         std::function<void(std::shared_ptr<const std::vector<Dppn>>)>
                             on_data) = 0;

  // Program a fresh copy; on completion the GTD points at it and the old
  // copy is invalidated. Reports the new TPPN.
  virtual void write_page(Tvpn tvpn, std::shared_ptr<const std::vector<Dppn>> entries,
                          std::function<void(Tppn)> on_durable) = 0;

  // GC relocation: succeeds only if the GTD still points at old_tppn.
  virtual bool relocate(Tvpn tvpn, Tppn new_tppn, Tppn old_tppn) = 0;

  // Test-time direct view (no simulated I/O).
  virtual std::vector<Dppn> read_page_now(Tvpn tvpn) const = 0;
};

// Production backend over the block manager and NAND state.
class TranslationStore : public TranslationBackend {
 public:
  TranslationStore(BlockManager& bm, std::uint32_t total_dlpns);

  // Seeds one all-unmapped translation page per TVPN at t=0 so the GTD is
  // total from the start.
  void format();

  std::uint32_t entries_per_page() const override { return entries_per_page_; }
  std::uint32_t page_count() const override {
    return static_cast<std::uint32_t>(gtd_.size());
  }
  Tppn gtd_lookup(Tvpn tvpn) const override { return gtd_[tvpn]; }
  void read_page(Tvpn tvpn,
                 std::function<void(std::shared_ptr<const std::vector<Dppn>>)>
                     on_data) override;
  void write_page(Tvpn tvpn, std::shared_ptr<const std::vector<Dppn>> entries,
                  std::function<void(Tppn)> on_durable) override;
  bool relocate(Tvpn tvpn, Tppn new_tppn, Tppn old_tppn) override;
  std::vector<Dppn> read_page_now(Tvpn tvpn) const override;

  std::uint64_t flash_reads() const { return reads_; }
  std::uint64_t flash_programs() const { return programs_; }

 private:
  BlockManager& bm_;
  std::uint32_t entries_per_page_;
  std::vector<Tppn> gtd_;
  std::uint64_t reads_ = 0;
  std::uint64_t programs_ = 0;
};

}  // namespace ssdsim::ftl
