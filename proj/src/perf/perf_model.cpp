#include "perf/perf_model.hpp"

#include <limits>
#include <ostream>

namespace ssdsim::perf {

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Ftl: return "ftl";
    case Stage::Chip: return "chip";
    case Stage::Bus: return "bus";
    case Stage::Host: return "host";
  }
  return "?";
}

SimTime read_latency(const TimingParams& p, bool hit) {
  SimTime total = p.t_ftl_map + p.t_ftl_cmd + p.t_nand_read + p.t_nand_bus +
                  p.t_host_transfer;
  if (!hit) total += p.t_nand_read + p.t_nand_bus;  // the map-load leg
  return total;
}

SaturationResult saturation_iops(const TimingParams& p, const TopologyParams& topo,
                                 bool hit, std::uint32_t io_bytes) {
  constexpr double kUnbounded = 1e18;
  double reads_per_cmd = hit ? 1.0 : 2.0;
  SaturationResult r;
  SimTime t_ftl = p.t_ftl_map + p.t_ftl_cmd;
  r.ftl_iops = t_ftl ? 1e9 / static_cast<double>(t_ftl) : kUnbounded;
  r.chip_iops = p.t_nand_read
                    ? 1e9 * topo.channels * topo.ways /
                          (reads_per_cmd * static_cast<double>(p.t_nand_read))
                    : kUnbounded;
  r.bus_iops = p.t_nand_bus ? 1e9 * topo.channels /
                                  (reads_per_cmd * static_cast<double>(p.t_nand_bus))
                            : kUnbounded;
  r.host_iops = static_cast<double>(topo.host_bytes_per_sec) / io_bytes;

  r.min_iops = r.ftl_iops;
  r.binding = Stage::Ftl;
  if (r.chip_iops < r.min_iops) {
    r.min_iops = r.chip_iops;
    r.binding = Stage::Chip;
  }
  if (r.bus_iops < r.min_iops) {
    r.min_iops = r.bus_iops;
    r.binding = Stage::Bus;
  }
  if (r.host_iops < r.min_iops) {
    r.min_iops = r.host_iops;
    r.binding = Stage::Host;
  }
  return r;
}

std::vector<SweepPoint> sweep(const std::vector<std::uint32_t>& channels,
                              const std::vector<std::uint32_t>& ways,
                              const std::vector<SimTime>& t_ftl_values,
                              const std::vector<bool>& hit_values,
                              const TimingParams& base, const TopologyParams& topo,
                              std::uint32_t io_bytes) {
  std::vector<SweepPoint> points;
  for (bool hit : hit_values)
    for (SimTime t_ftl : t_ftl_values)
      for (std::uint32_t w : ways)
        for (std::uint32_t c : channels) {
          TimingParams p = base;
          p.t_ftl_map = t_ftl;
          TopologyParams t = topo;
          t.channels = c;
          t.ways = w;
          points.push_back(
              SweepPoint{c, w, t_ftl, hit, saturation_iops(p, t, hit, io_bytes)});
        }
  return points;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
  os << "channels,ways,t_ftl_ns,hit,ftl_kiops,chip_kiops,bus_kiops,host_kiops,"
        "min_kiops,binding\n";
  for (const auto& pt : points) {
    const auto& r = pt.result;
    os << pt.channels << ',' << pt.ways << ',' << pt.t_ftl << ','
       << (pt.hit ? 1 : 0) << ',' << r.ftl_iops / 1e3 << ',' << r.chip_iops / 1e3
       << ',' << r.bus_iops / 1e3 << ',' << r.host_iops / 1e3 << ','
       << r.min_iops / 1e3 << ',' << to_string(r.binding) << '\n';
  }
}

}  // namespace ssdsim::perf
