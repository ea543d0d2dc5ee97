#include "ssd.hpp"

namespace ssdsim {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Ideal: return "ideal";
    case Scheme::FixedHit: return "fixed";
    case Scheme::Fmmu: return "fmmu";
    case Scheme::Dftl: return "dftl";
    case Scheme::Cdftl: return "cdftl";
  }
  return "?";
}

Ssd::Ssd(const SsdConfig& cfg)
    : config(cfg),
      nand(engine, ledger, cfg.geometry, cfg.timing,
           cfg.geometry.page_data_bytes / cfg.logical_page_bytes),
      layout(ftl::DataLayout::make(cfg.geometry, cfg.logical_page_bytes,
                                   cfg.sector_bytes)),
      bm(engine, nand, layout, cfg.bm),
      host(engine, ledger, layout, cfg.host, stats) {
  const auto& g = cfg.geometry;
  SSDSIM_CHECK_MSG(cfg.user_blocks < g.block_count(),
                   "no over-provisioning: user_blocks must leave spare blocks");
  total_dlpns_ = static_cast<std::uint64_t>(cfg.user_blocks) * g.pages_per_block *
                 layout.slots_per_page;

  switch (cfg.scheme) {
    case Scheme::Ideal:
      map = std::make_unique<ftl::IdealMapUnit>(engine, total_dlpns_);
      break;
    case Scheme::FixedHit: {
      // Reserve one block per chip as a fixed map area so miss-leg reads hit
      // real programmed pages.
      std::vector<nand::PageAddress> map_pages;
      for (std::uint32_t chip = 0; chip < g.chip_count(); ++chip) {
        std::uint32_t plane = chip * g.planes_per_chip;
        std::uint32_t block = plane * g.blocks_per_plane + (g.blocks_per_plane - 1);
        bm.reserve_bootstrap_block(block);
        nand::PageAddress addr{chip / g.ways_per_channel, chip % g.ways_per_channel,
                               0, g.blocks_per_plane - 1, 0};
        nand.bootstrap_program(addr, nand::PageWrite{nand::OobKind::None, {}, {}});
        map_pages.push_back(addr);
      }
      auto unit = std::make_unique<ftl::FixedHitMapUnit>(
          engine, nand, total_dlpns_, cfg.fixed, std::move(map_pages));
      unit->attach_ledger(&ledger);
      map = std::move(unit);
      break;
    }
    case Scheme::Fmmu: {
      tstore = std::make_unique<ftl::TranslationStore>(
          bm, static_cast<std::uint32_t>(total_dlpns_));
      tstore->format();
      auto unit = std::make_unique<fmmu::Fmmu>(engine, &ledger, *tstore, cfg.fmmu,
                                               total_dlpns_);
      fmmu_unit = unit.get();
      map = std::move(unit);
      break;
    }
    case Scheme::Dftl:
    case Scheme::Cdftl: {
      tstore = std::make_unique<ftl::TranslationStore>(
          bm, static_cast<std::uint32_t>(total_dlpns_));
      tstore->format();
      baseline::SoftwareMapConfig sw = cfg.software;
      sw.scheme = cfg.scheme == Scheme::Dftl ? baseline::Scheme::Dftl
                                             : baseline::Scheme::Cdftl;
      map = std::make_unique<baseline::SoftwareMapUnit>(engine, &ledger, *tstore,
                                                        sw, total_dlpns_);
      break;
    }
  }

  hrm = std::make_unique<ftl::HostRequestManager>(engine, bm, *map, host, layout,
                                                  stats);
  gcm = std::make_unique<ftl::GarbageCollector>(engine, bm, *map, layout, stats,
                                                cfg.gc);
  if (fmmu_unit)
    fmmu_unit->set_gc_victim_fraction(
        [g = gcm.get()] { return g->current_victim_valid_fraction(); });

  ledger.resize(engine.component_count());
}

void Ssd::drain(std::size_t max_events) { engine.run_to_completion(max_events); }

void Ssd::flush_map_and_drain() {
  drain();
  bm.drain_partial_pages();
  drain();
  bool done = false;
  map->force_flush([&] { done = true; });
  drain();
  SSDSIM_CHECK_MSG(done, "map unit failed to drain");
}

void Ssd::audit_state() {
  std::vector<Dppn> flat = map->reconstruct_map();
  bm.audit_valid_counts(
      [&](Dlpn d) { return d < flat.size() ? flat[d] : kUnmapped; },
      tstore ? std::function<Tppn(Tvpn)>(
                   [this](Tvpn t) { return tstore->gtd_lookup(t); })
             : std::function<Tppn(Tvpn)>());
  // Single owner: each mapped DLPN resolves to one programmed slot whose OOB
  // tag names it.
  const auto& g = nand.geometry();
  for (Dlpn d = 0; d < flat.size(); ++d) {
    Dppn dppn = flat[d];
    if (dppn == kUnmapped) continue;
    std::uint32_t ppn = layout.ppn_of(dppn);
    const auto& st = nand.block_state(ppn / g.pages_per_block);
    std::uint32_t page = ppn % g.pages_per_block;
    SSDSIM_CHECK_MSG(page < st.next_program_page && !st.oob.empty(),
                     "mapping points at an unwritten page");
    SSDSIM_CHECK_MSG(
        st.oob[static_cast<std::size_t>(page) * layout.slots_per_page +
               layout.slot_of(dppn)] == d,
        "OOB tag does not match the mapping for dlpn " << d);
  }
}

}  // namespace ssdsim
