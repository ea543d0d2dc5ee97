#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "common/types.hpp"
#include "nand/timing.hpp"

namespace ssdsim::perf {

// Closed-form stage-bound model for 4KB random reads: per-command timing
// segments plus per-stage saturation bounds.
struct TimingParams {
  SimTime t_ftl_map = 0;
  SimTime t_ftl_cmd = 0;
  SimTime t_nand_read = us(35);
  SimTime t_nand_program = us(390);
  SimTime t_nand_erase = ms(4);
  SimTime t_nand_bus = 0;       // per transfer of one command's data
  SimTime t_host_transfer = 0;  // per command over the host link

  static TimingParams from_nand(const nand::NandTiming& nand_timing,
                                std::uint32_t io_bytes,
                                std::uint64_t host_bytes_per_sec) {
    TimingParams p;
    p.t_nand_read = nand_timing.t_read;
    p.t_nand_program = nand_timing.t_program;
    p.t_nand_erase = nand_timing.t_erase;
    p.t_nand_bus = nand_timing.bus_time(io_bytes);
    p.t_host_transfer = transfer_ns(io_bytes, host_bytes_per_sec);
    return p;
  }
};

struct TopologyParams {
  std::uint32_t channels = 16;
  std::uint32_t ways = 8;
  std::uint64_t host_bytes_per_sec = 15'760'000'000;
  std::uint32_t outstanding = 512;
};

enum class Stage : std::uint8_t { Ftl, Chip, Bus, Host };
const char* to_string(Stage s);

// Latency of a single command: map lookup, command issue, then the flash
// read and transfer legs; a map miss runs the read+bus pair twice.
SimTime read_latency(const TimingParams& p, bool hit);

struct SaturationResult {
  double ftl_iops;   // infinity encoded as a huge sentinel when t_ftl is 0
  double chip_iops;
  double bus_iops;
  double host_iops;
  double min_iops;
  Stage binding;
};

SaturationResult saturation_iops(const TimingParams& p, const TopologyParams& topo,
                                 bool hit, std::uint32_t io_bytes);

struct SweepPoint {
  std::uint32_t channels;
  std::uint32_t ways;
  SimTime t_ftl;
  bool hit;
  SaturationResult result;
};

// Grid sweep over topology x FTL time; one row per configuration with every
// stage bound and the binding stage labeled.
std::vector<SweepPoint> sweep(const std::vector<std::uint32_t>& channels,
                              const std::vector<std::uint32_t>& ways,
                              const std::vector<SimTime>& t_ftl_values,
                              const std::vector<bool>& hit_values,
                              const TimingParams& base, const TopologyParams& topo,
                              std::uint32_t io_bytes);

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace ssdsim::perf
