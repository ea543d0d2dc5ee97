#pragma once

#include <iosfwd>
#include <vector>

#include "config/run_config.hpp"
#include "report/run_report.hpp"

namespace ssdsim::report {

// Builds the stack, preconditions, executes the configured phases, and
// aggregates the measured window into a report.
RunReport run_experiment(const config::RunConfig& rc);

struct CompareRow {
  std::string label;
  std::string scheme;
  std::uint32_t cores = 1;
  SimTime elapsed_ns = 0;
  double normalized = 0.0;  // to the ideal (zero FTL time) run
};

// Same workload across schemes; elapsed times normalized to the ideal run.
// Throws if the workloads differ or no ideal run is present.
std::vector<CompareRow> compare(const std::vector<config::RunConfig>& configs,
                                std::vector<RunReport>* reports_out = nullptr);
void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows);

struct ScalePoint {
  std::uint32_t channels = 0;
  std::uint32_t ways = 0;
  RunReport report;
};

// FMMU scalability sweep from 1-channel/1-way up to the preset's topology.
std::vector<ScalePoint> scale_sweep(const config::RunConfig& base);
void write_scale_csv(std::ostream& os, const std::vector<ScalePoint>& points);

}  // namespace ssdsim::report
