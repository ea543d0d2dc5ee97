#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "common/types.hpp"

namespace ssdsim::report {

// Everything one measured window produces. The CSV column set is fixed;
// golden-file tests pin it.
struct RunReport {
  std::string label;
  std::string scheme;
  std::string workload;
  std::uint64_t seed = 0;

  SimTime elapsed_ns = 0;
  std::uint64_t commands = 0;
  double iops = 0.0;
  double throughput_gbps = 0.0;  // decimal GB/s of host data

  double mean_latency_us = 0.0;
  double p50_latency_us = 0.0;
  double p95_latency_us = 0.0;
  double p99_latency_us = 0.0;

  double util_host = 0.0;
  double util_bus = 0.0;   // busiest channel
  double util_chip = 0.0;  // busiest chip
  double util_ftl = 0.0;   // busiest map-unit machine / core
  std::string binding_stage;

  std::uint64_t flash_reads = 0;
  std::uint64_t flash_programs = 0;
  std::uint64_t flash_erases = 0;
  std::uint64_t multiplane_reads = 0;
  std::uint64_t oneshot_programs = 0;
  std::uint64_t flash_read_bytes = 0;
  std::uint64_t flash_program_bytes = 0;
  std::uint64_t host_read_bytes = 0;
  std::uint64_t host_write_bytes = 0;

  std::uint64_t gc_victims = 0;
  std::uint64_t gc_copied_slots = 0;
  std::uint64_t gc_erases = 0;
  double waf = 0.0;
};

extern const char* const kReportCsvHeader;

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const RunReport& r);
std::string to_csv(const RunReport& r);  // header + one row

}  // namespace ssdsim::report
