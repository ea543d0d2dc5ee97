#pragma once

#include <cstdint>

#include "common/error.hpp"
#include "common/types.hpp"

namespace ssdsim::nand {

// Physical location of one NAND page.
struct PageAddress {
  std::uint32_t channel = 0;
  std::uint32_t way = 0;
  std::uint32_t plane = 0;
  std::uint32_t block = 0;
  std::uint32_t page = 0;

  bool operator==(const PageAddress&) const = default;
};

// Chips organized as channels x ways, each chip split into planes of blocks.
// Defaults follow the V2 2-bit 3D NAND part.
struct NandGeometry {
  std::uint32_t channels = 16;
  std::uint32_t ways_per_channel = 8;
  std::uint32_t planes_per_chip = 2;
  std::uint32_t blocks_per_plane = 19;
  std::uint32_t pages_per_block = 256;
  std::uint32_t page_data_bytes = 16384;
  std::uint32_t page_oob_bytes = 1536;

  void validate() const {
    SSDSIM_CHECK(channels >= 1 && ways_per_channel >= 1 && planes_per_chip >= 1);
    SSDSIM_CHECK(blocks_per_plane >= 1 && pages_per_block >= 1);
    SSDSIM_CHECK(page_data_bytes >= 1);
  }

  std::uint32_t chip_count() const { return channels * ways_per_channel; }
  std::uint32_t plane_count() const { return chip_count() * planes_per_chip; }
  std::uint32_t block_count() const { return plane_count() * blocks_per_plane; }
  std::uint64_t page_count() const {
    return static_cast<std::uint64_t>(block_count()) * pages_per_block;
  }
  std::uint64_t block_data_bytes() const {
    return static_cast<std::uint64_t>(pages_per_block) * page_data_bytes;
  }

  std::uint32_t chip_index(std::uint32_t channel, std::uint32_t way) const {
    return channel * ways_per_channel + way;
  }
  std::uint32_t plane_index(const PageAddress& a) const {
    return chip_index(a.channel, a.way) * planes_per_chip + a.plane;
  }
  std::uint32_t block_index(const PageAddress& a) const {
    return plane_index(a) * blocks_per_plane + a.block;
  }
  // Physical page number; translation pages are addressed with these.
  std::uint32_t ppn(const PageAddress& a) const {
    return block_index(a) * pages_per_block + a.page;
  }
  PageAddress address_of_ppn(std::uint32_t ppn_value) const {
    PageAddress a;
    a.page = ppn_value % pages_per_block;
    std::uint32_t block = ppn_value / pages_per_block;
    a.block = block % blocks_per_plane;
    std::uint32_t plane = block / blocks_per_plane;
    a.plane = plane % planes_per_chip;
    std::uint32_t chip = plane / planes_per_chip;
    a.way = chip % ways_per_channel;
    a.channel = chip / ways_per_channel;
    return a;
  }

  bool contains(const PageAddress& a) const {
    return a.channel < channels && a.way < ways_per_channel &&
           a.plane < planes_per_chip && a.block < blocks_per_plane &&
           a.page < pages_per_block;
  }
};

}  // namespace ssdsim::nand
