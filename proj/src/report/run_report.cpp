#include "report/run_report.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace ssdsim::report {

const char* const kReportCsvHeader =
    "label,scheme,workload,seed,elapsed_ns,commands,iops,throughput_gbps,"
    "mean_latency_us,p50_latency_us,p95_latency_us,p99_latency_us,"
    "util_host,util_bus,util_chip,util_ftl,binding_stage,"
    "flash_reads,flash_programs,flash_erases,multiplane_reads,oneshot_programs,"
    "flash_read_bytes,flash_program_bytes,host_read_bytes,host_write_bytes,"
    "gc_victims,gc_copied_slots,gc_erases,waf";

void write_csv_header(std::ostream& os) { os << kReportCsvHeader << '\n'; }

namespace {
// Fixed-precision doubles keep the byte stream identical across runs.
std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
}  // namespace

void write_csv_row(std::ostream& os, const RunReport& r) {
  os << r.label << ',' << r.scheme << ',' << r.workload << ',' << r.seed << ','
     << r.elapsed_ns << ',' << r.commands << ',' << fixed(r.iops, 1) << ','
     << fixed(r.throughput_gbps) << ',' << fixed(r.mean_latency_us) << ','
     << fixed(r.p50_latency_us) << ',' << fixed(r.p95_latency_us) << ','
     << fixed(r.p99_latency_us) << ',' << fixed(r.util_host) << ','
     << fixed(r.util_bus) << ',' << fixed(r.util_chip) << ',' << fixed(r.util_ftl)
     << ',' << r.binding_stage << ',' << r.flash_reads << ',' << r.flash_programs
     << ',' << r.flash_erases << ',' << r.multiplane_reads << ','
     << r.oneshot_programs << ',' << r.flash_read_bytes << ','
     << r.flash_program_bytes << ',' << r.host_read_bytes << ','
     << r.host_write_bytes << ',' << r.gc_victims << ',' << r.gc_copied_slots
     << ',' << r.gc_erases << ',' << fixed(r.waf) << '\n';
}

std::string to_csv(const RunReport& r) {
  std::ostringstream os;
  write_csv_header(os);
  write_csv_row(os, r);
  return os.str();
}

}  // namespace ssdsim::report
