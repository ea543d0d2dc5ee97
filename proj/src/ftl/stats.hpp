#pragma once

#include <cstdint>
#include <vector>

#include "common/types.hpp"

namespace ssdsim::ftl {

struct FtlStats {
  // Host side (measurement window only for command counts/latencies).
  std::uint64_t read_commands = 0;
  std::uint64_t write_commands = 0;
  std::uint64_t host_read_bytes = 0;
  std::uint64_t host_write_bytes = 0;
  std::vector<SimTime> latencies_ns;

  // Whole-run counters.
  std::uint64_t host_written_slots = 0;
  std::uint64_t gc_victims = 0;
  std::uint64_t gc_copied_slots = 0;
  std::uint64_t gc_erases = 0;
  std::uint64_t map_lookups = 0;
  std::uint64_t map_updates = 0;
  std::uint64_t map_cond_updates = 0;
  std::uint64_t map_cond_stale = 0;

  SimTime last_completion = 0;

  bool in_window = false;

  void reset_window() {
    read_commands = write_commands = 0;
    host_read_bytes = host_write_bytes = 0;
    latencies_ns.clear();
  }
};

}  // namespace ssdsim::ftl
