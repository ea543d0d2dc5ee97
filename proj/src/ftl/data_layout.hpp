#pragma once

#include "common/error.hpp"
#include "common/types.hpp"
#include "nand/geometry.hpp"

namespace ssdsim::ftl {

// Logical pages (the chop unit) are smaller than a NAND page: each NAND data
// page packs `slots_per_page` consecutive-arriving logical pages, and a DPPN
// addresses one slot. Translation pages are whole NAND pages (TPPN == PPN).
struct DataLayout {
  std::uint32_t logical_page_bytes = 4096;
  std::uint32_t sector_bytes = 512;
  std::uint32_t slots_per_page = 4;
  std::uint32_t sectors_per_logical_page = 8;

  static DataLayout make(const nand::NandGeometry& g, std::uint32_t logical_page_bytes,
                         std::uint32_t sector_bytes) {
    DataLayout d;
    d.logical_page_bytes = logical_page_bytes;
    d.sector_bytes = sector_bytes;
    SSDSIM_CHECK(logical_page_bytes % sector_bytes == 0);
    SSDSIM_CHECK(g.page_data_bytes % logical_page_bytes == 0);
    d.slots_per_page = g.page_data_bytes / logical_page_bytes;
    d.sectors_per_logical_page = logical_page_bytes / sector_bytes;
    return d;
  }

  Dppn dppn_of(std::uint32_t ppn, std::uint32_t slot) const {
    return ppn * slots_per_page + slot;
  }
  std::uint32_t ppn_of(Dppn dppn) const { return dppn / slots_per_page; }
  std::uint32_t slot_of(Dppn dppn) const { return dppn % slots_per_page; }
};

}  // namespace ssdsim::ftl
