#pragma once

#include <memory>

#include "baseline/software_map_unit.hpp"
#include "fmmu/fmmu.hpp"
#include "ftl/block_manager.hpp"
#include "ftl/fixed_hit_map_unit.hpp"
#include "ftl/gcm.hpp"
#include "ftl/host_interface.hpp"
#include "ftl/hrm.hpp"
#include "ftl/ideal_map_unit.hpp"
#include "ftl/translation_store.hpp"
#include "nand/nand_flash.hpp"

namespace ssdsim {

enum class Scheme : std::uint8_t { Ideal, FixedHit, Fmmu, Dftl, Cdftl };

const char* to_string(Scheme s);

struct SsdConfig {
  nand::NandGeometry geometry;
  nand::NandTiming timing;
  std::uint32_t logical_page_bytes = 4096;
  std::uint32_t sector_bytes = 512;
  std::uint32_t user_blocks = 4096;  // advertised capacity; the rest is OP
  ftl::HostLinkConfig host;
  ftl::BlockManagerConfig bm;
  ftl::GcConfig gc;
  Scheme scheme = Scheme::Ideal;
  ftl::FixedHitMapUnit::Config fixed;
  fmmu::FmmuConfig fmmu;
  baseline::SoftwareMapConfig software;
};

// The assembled device: NAND, block manager, host interface, HRM, GCM, and
// the selected map cache unit.
class Ssd {
 public:
  explicit Ssd(const SsdConfig& config);

  std::uint64_t total_dlpns() const { return total_dlpns_; }
  std::uint64_t user_sectors() const {
    return total_dlpns_ * layout.sectors_per_logical_page;
  }

  void submit(ftl::HostCommand cmd, ftl::HostInterface::CompletionHandler cb) {
    host.submit(std::move(cmd), std::move(cb));
  }

  // Runs the engine dry (workload stopped), then write back the whole map.
  void drain(std::size_t max_events = SIZE_MAX);
  void flush_map_and_drain();

  // Quiescent-state checks: BM valid counts against the durable map and
  // single-owner resolution for every mapped DLPN. Call after
  // flush_map_and_drain.
  void audit_state();

  double utilization(ComponentId comp) const {
    return ledger.utilization(comp, engine.now());
  }

  SsdConfig config;
  EventEngine engine;
  BusyLedger ledger;
  nand::NandFlash nand;
  ftl::DataLayout layout;
  ftl::FtlStats stats;
  ftl::BlockManager bm;
  ftl::HostInterface host;
  std::unique_ptr<ftl::TranslationStore> tstore;  // cache schemes only
  std::unique_ptr<ftl::MapUnit> map;
  std::unique_ptr<ftl::HostRequestManager> hrm;
  std::unique_ptr<ftl::GarbageCollector> gcm;
  fmmu::Fmmu* fmmu_unit = nullptr;  // borrowed; set when scheme == Fmmu

 private:
  std::uint64_t total_dlpns_ = 0;
};

}  // namespace ssdsim
