#include "report/experiment.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "workload/workload.hpp"

namespace ssdsim::report {

using config::PreconditionPolicy;
using config::RunConfig;
using config::RunMode;
using config::WorkloadKind;

namespace {

struct UtilView {
  double host = 0, bus = 0, chip = 0, ftl = 0;
};

UtilView classify_utilization(const Ssd& ssd) {
  UtilView u;
  SimTime now = ssd.engine.now();
  for (ComponentId c = 0; c < ssd.engine.component_count(); ++c) {
    const std::string& name = ssd.engine.component_name(c);
    double util = ssd.ledger.utilization(c, now);
    if (name == "host_link") u.host = std::max(u.host, util);
    else if (name.rfind("nand_bus.", 0) == 0) u.bus = std::max(u.bus, util);
    else if (name.rfind("nand_chip.", 0) == 0) u.chip = std::max(u.chip, util);
    else if (name.rfind("fmmu_", 0) == 0 || name == "map_unit" ||
             name.rfind("dftl_core.", 0) == 0 || name.rfind("cdftl_core.", 0) == 0)
      u.ftl = std::max(u.ftl, util);
  }
  return u;
}

const char* binding_stage(const UtilView& u) {
  double best = u.host;
  const char* name = "host";
  if (u.bus > best) { best = u.bus; name = "bus"; }
  if (u.chip > best) { best = u.chip; name = "chip"; }
  if (u.ftl > best) { best = u.ftl; name = "ftl"; }
  return name;
}

double percentile(std::vector<SimTime>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  std::size_t rank = static_cast<std::size_t>(p * (sorted.size() - 1));
  return static_cast<double>(sorted[rank]);
}

std::string workload_name(const RunConfig& rc) {
  if (rc.kind == WorkloadKind::Trace) {
    auto slash = rc.trace_path.find_last_of('/');
    return "trace:" +
           (slash == std::string::npos ? rc.trace_path
                                       : rc.trace_path.substr(slash + 1));
  }
  std::ostringstream os;
  os << workload::to_string(rc.synthetic.pattern) << ":"
     << rc.synthetic.io_bytes / 1024 << "k";
  return os.str();
}

}  // namespace

RunReport run_experiment(const RunConfig& rc) {
  Ssd ssd(rc.ssd);

  // Preconditioning: sequential fill for everything but explicit "none";
  // random-write tests continue until the first GC victim selection.
  bool is_rand_write = rc.kind == WorkloadKind::Synthetic &&
                       rc.synthetic.pattern == workload::Pattern::RandWrite;
  if (rc.precondition != PreconditionPolicy::None) {
    workload::precondition_fill(ssd);
    if (rc.precondition == PreconditionPolicy::Auto && is_rand_write)
      workload::precondition_random_until_gc(ssd, rc.synthetic.io_bytes, rc.seed + 1);
  }

  std::unique_ptr<workload::SyntheticDriver> synthetic;
  std::unique_ptr<workload::TraceDriver> trace;
  if (rc.kind == WorkloadKind::Synthetic) {
    synthetic = std::make_unique<workload::SyntheticDriver>(ssd, rc.synthetic);
  } else {
    auto records = workload::parse_trace_file(rc.trace_path, rc.trace_csv);
    if (rc.trace_open_loop) {
      // Rebase arrivals onto the current clock.
      double base_ms = static_cast<double>(ssd.engine.now()) / 1e6;
      for (auto& r : records) r.arrival_ms += base_ms;
    }
    trace = std::make_unique<workload::TraceDriver>(
        ssd, std::move(records), rc.trace_open_loop, rc.ssd.host.max_outstanding);
  }

  RunMode mode = rc.mode;
  if (rc.kind == WorkloadKind::Trace) mode = RunMode::TraceEnd;
  else if (rc.command_limit > 0 && mode != RunMode::Duration)
    mode = RunMode::CommandLimit;

  // Snapshots bracket the measured window; whatever the post-window drain
  // completes stays out of the report.
  auto nand_before = ssd.nand.stats();
  nand::NandStats nand_after;
  UtilView utils;
  std::uint64_t gc_victims_before = 0, gc_copied_before = 0, gc_erases_before = 0;
  std::uint64_t gc_victims_after = 0, gc_copied_after = 0, gc_erases_after = 0;

  auto open_window = [&] {
    ssd.stats.reset_window();
    ssd.stats.in_window = true;
    ssd.ledger.reset();
    ssd.ledger.set_window_start(ssd.engine.now());
    nand_before = ssd.nand.stats();
    gc_victims_before = ssd.stats.gc_victims;
    gc_copied_before = ssd.stats.gc_copied_slots;
    gc_erases_before = ssd.stats.gc_erases;
  };
  auto close_window = [&] {
    ssd.stats.in_window = false;
    nand_after = ssd.nand.stats();
    gc_victims_after = ssd.stats.gc_victims;
    gc_copied_after = ssd.stats.gc_copied_slots;
    gc_erases_after = ssd.stats.gc_erases;
    utils = classify_utilization(ssd);
  };

  SimTime window_start = 0;
  SimTime last_completion = 0;

  if (mode == RunMode::Duration) {
    SSDSIM_CHECK(synthetic != nullptr);
    synthetic->start(0);
    ssd.engine.run_until(ssd.engine.now() + rc.warm_ns);
    open_window();
    window_start = ssd.engine.now();
    ssd.engine.run_until(window_start + rc.measure_ns);
    last_completion = ssd.engine.now();
    close_window();
    synthetic->stop();
    ssd.drain();
  } else {
    open_window();
    window_start = ssd.engine.now();
    if (synthetic) synthetic->start(rc.command_limit);
    if (trace) trace->start();
    ssd.drain();
    // Elapsed runs to the final command completion, not to trailing GC.
    last_completion = std::max(ssd.stats.last_completion, window_start);
    close_window();
  }

  RunReport r;
  r.label = rc.label;
  r.scheme = to_string(rc.ssd.scheme);
  r.workload = workload_name(rc);
  r.seed = rc.seed;
  r.elapsed_ns = last_completion - window_start;
  r.commands = ssd.stats.read_commands + ssd.stats.write_commands;
  double seconds = static_cast<double>(r.elapsed_ns) / 1e9;
  if (seconds > 0) {
    r.iops = r.commands / seconds;
    r.throughput_gbps =
        (ssd.stats.host_read_bytes + ssd.stats.host_write_bytes) / seconds / 1e9;
  }

  std::vector<SimTime> lat = ssd.stats.latencies_ns;
  std::sort(lat.begin(), lat.end());
  if (!lat.empty()) {
    double sum = 0;
    for (SimTime v : lat) sum += static_cast<double>(v);
    r.mean_latency_us = sum / lat.size() / 1e3;
    r.p50_latency_us = percentile(lat, 0.50) / 1e3;
    r.p95_latency_us = percentile(lat, 0.95) / 1e3;
    r.p99_latency_us = percentile(lat, 0.99) / 1e3;
  }

  UtilView u = utils;
  r.util_host = u.host;
  r.util_bus = u.bus;
  r.util_chip = u.chip;
  r.util_ftl = u.ftl;
  r.binding_stage = binding_stage(u);

  auto delta = [&](auto member) {
    return (nand_after.*member) - (nand_before.*member);
  };
  r.flash_read_bytes = delta(&nand::NandStats::read_bytes);
  r.flash_program_bytes = delta(&nand::NandStats::program_bytes);
  for (std::size_t k = 0; k < nand_after.ops_by_kind.size(); ++k) {
    std::uint64_t d = nand_after.ops_by_kind[k] - nand_before.ops_by_kind[k];
    switch (static_cast<nand::FlashOpKind>(k)) {
      case nand::FlashOpKind::ReadPage: r.flash_reads += d; break;
      case nand::FlashOpKind::MultiPlaneRead:
        r.flash_reads += d;
        r.multiplane_reads = d;
        break;
      case nand::FlashOpKind::ProgramPage: r.flash_programs += d; break;
      case nand::FlashOpKind::MultiPlaneProgram: r.flash_programs += d; break;
      case nand::FlashOpKind::OneShotProgram:
        r.flash_programs += d;
        r.oneshot_programs = d;
        break;
      case nand::FlashOpKind::EraseBlock: r.flash_erases = d; break;
    }
  }
  r.host_read_bytes = ssd.stats.host_read_bytes;
  r.host_write_bytes = ssd.stats.host_write_bytes;
  r.gc_victims = gc_victims_after - gc_victims_before;
  r.gc_copied_slots = gc_copied_after - gc_copied_before;
  r.gc_erases = gc_erases_after - gc_erases_before;
  if (r.host_write_bytes > 0)
    r.waf = static_cast<double>(r.flash_program_bytes) / r.host_write_bytes;
  return r;
}

std::vector<CompareRow> compare(const std::vector<RunConfig>& configs,
                                std::vector<RunReport>* reports_out) {
  if (configs.size() < 2)
    throw ConfigError("compare needs at least two configurations");
  std::string w0 = workload_name(configs[0]);
  for (const auto& rc : configs)
    if (workload_name(rc) != w0)
      throw ConfigError("compare: mismatched workloads: " + w0 + " vs " +
                        workload_name(rc));

  std::vector<CompareRow> rows;
  double ideal_elapsed = 0;
  std::vector<RunReport> reports;
  for (const auto& rc : configs) {
    RunReport r = run_experiment(rc);
    CompareRow row;
    row.label = rc.label;
    row.scheme = r.scheme;
    row.cores = rc.ssd.software.cores;
    row.elapsed_ns = r.elapsed_ns;
    rows.push_back(row);
    reports.push_back(std::move(r));
    if (rc.ssd.scheme == Scheme::Ideal)
      ideal_elapsed = static_cast<double>(rows.back().elapsed_ns);
  }
  if (ideal_elapsed <= 0)
    throw ConfigError("compare: no ideal (zero FTL time) run to normalize against");
  for (auto& row : rows)
    row.normalized = static_cast<double>(row.elapsed_ns) / ideal_elapsed;
  if (reports_out) *reports_out = std::move(reports);
  return rows;
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "label,scheme,cores,elapsed_ns,normalized\n";
  for (const auto& r : rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.normalized);
    os << r.label << ',' << r.scheme << ',' << r.cores << ',' << r.elapsed_ns
       << ',' << buf << '\n';
  }
}

std::vector<ScalePoint> scale_sweep(const RunConfig& base) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> grid = {
      {1, 1}, {1, 8}, {2, 8}, {4, 8}, {8, 8}, {16, 8}, {32, 8}};
  std::vector<ScalePoint> points;
  for (auto [channels, ways] : grid) {
    if (channels > base.ssd.geometry.channels) continue;
    RunConfig rc = base;
    rc.label = "scale_" + std::to_string(channels) + "x" + std::to_string(ways);
    rc.ssd.geometry.channels = channels;
    rc.ssd.geometry.ways_per_channel = ways;
    // Keep 15%-class OP at every size.
    std::uint32_t blocks = rc.ssd.geometry.block_count();
    rc.ssd.user_blocks = blocks * 85 / 100;
    ScalePoint pt;
    pt.channels = channels;
    pt.ways = ways;
    pt.report = run_experiment(rc);
    points.push_back(std::move(pt));
  }
  return points;
}

void write_scale_csv(std::ostream& os, const std::vector<ScalePoint>& points) {
  os << "channels,ways,kiops,throughput_gbps,binding_stage,util_host,util_bus,"
        "util_chip,util_ftl\n";
  for (const auto& pt : points) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%u,%u,%.1f,%.4f,%s,%.4f,%.4f,%.4f,%.4f",
                  pt.channels, pt.ways, pt.report.iops / 1e3,
                  pt.report.throughput_gbps, pt.report.binding_stage.c_str(),
                  pt.report.util_host, pt.report.util_bus, pt.report.util_chip,
                  pt.report.util_ftl);
    os << buf << '\n';
  }
}

}  // namespace ssdsim::report
