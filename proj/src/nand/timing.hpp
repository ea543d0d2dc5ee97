#pragma once

#include <cstdint>

#include "common/error.hpp"
#include "common/types.hpp"

namespace ssdsim::nand {

enum class FlashOpKind : std::uint8_t {
  ReadPage,
  ProgramPage,
  EraseBlock,
  MultiPlaneRead,
  MultiPlaneProgram,
  OneShotProgram,  // may also span planes; pages per plane share a word line
};

const char* to_string(FlashOpKind kind);

// Access times and bus speed; defaults are the V2 2-bit 3D NAND column.
struct NandTiming {
  SimTime t_read = us(35);
  SimTime t_program = us(390);
  SimTime t_erase = ms(4);
  std::uint64_t bus_bytes_per_sec = 667'000'000;
  // Fixed per-transfer cost on the channel bus. Calibration knob, default 0;
  // the raw 16x667MB/s channel bandwidth overshoots measured sequential-read
  // throughput unless some per-operation cost is charged.
  SimTime bus_overhead_per_op = 0;
  std::uint32_t wordline_group_size = 2;  // pages programmed by one one-shot
  std::uint32_t endurance_limit = 3000;   // P/E cycles; exceeding it only warns

  void validate() const {
    SSDSIM_CHECK(t_read > 0 && t_program > 0 && t_erase > 0);
    SSDSIM_CHECK(bus_bytes_per_sec > 0);
    SSDSIM_CHECK(wordline_group_size >= 1);
  }

  SimTime bus_time(std::uint64_t bytes) const {
    return transfer_ns(bytes, bus_bytes_per_sec) + bus_overhead_per_op;
  }
};

inline SimTime cell_time(const NandTiming& t, FlashOpKind kind) {
  switch (kind) {
    case FlashOpKind::ReadPage:
    case FlashOpKind::MultiPlaneRead:
      return t.t_read;
    case FlashOpKind::ProgramPage:
    case FlashOpKind::MultiPlaneProgram:
    case FlashOpKind::OneShotProgram:
      return t.t_program;
    case FlashOpKind::EraseBlock:
      return t.t_erase;
  }
  return 0;
}

// Cell time of a program covering `pages` pages spread over `planes` planes.
// A one-shot or multi-plane group costs a single t_program for all of its
// pages; transfer bytes still scale with the page count. Requesting more
// word-line-sharing pages than the group size is a caller bug.
inline SimTime effective_program_time(const NandTiming& t, FlashOpKind kind,
                                      std::uint32_t pages, std::uint32_t planes = 1) {
  SSDSIM_CHECK(pages >= 1 && planes >= 1);
  switch (kind) {
    case FlashOpKind::ProgramPage:
      SSDSIM_CHECK(pages == 1);
      return t.t_program;
    case FlashOpKind::MultiPlaneProgram:
      SSDSIM_CHECK(pages <= planes);
      return t.t_program;
    case FlashOpKind::OneShotProgram: {
      SSDSIM_CHECK(pages % planes == 0);
      std::uint32_t per_plane = pages / planes;
      SSDSIM_CHECK_MSG(per_plane <= t.wordline_group_size,
                       "one-shot group of " << per_plane << " pages exceeds word line");
      return t.t_program;
    }
    default:
      SSDSIM_CHECK_MSG(false, "not a program kind");
  }
  return 0;
}

}  // namespace ssdsim::nand
