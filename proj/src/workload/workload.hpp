#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "ssd.hpp"

namespace ssdsim::workload {

enum class Pattern : std::uint8_t { RandRead, RandWrite, SeqRead, SeqWrite };

const char* to_string(Pattern p);
bool pattern_is_write(Pattern p);

struct SyntheticSpec {
  Pattern pattern = Pattern::RandRead;
  std::uint32_t io_bytes = 4096;
  std::uint32_t outstanding = 512;
  SimTime inter_arrival = 0;
  std::uint64_t span_sectors = 0;  // 0: whole user span
  std::uint64_t seed = 1;
};

// Closed-loop generator: keeps `outstanding` commands in flight, drawing
// LBAs uniformly for random patterns and wrapping at the span end for
// sequential ones. Deterministic under a fixed seed.
class SyntheticDriver {
 public:
  SyntheticDriver(Ssd& ssd, SyntheticSpec spec);

  // command_limit 0 runs until stop().
  void start(std::uint64_t command_limit = 0);
  void stop() { stopping_ = true; }
  std::uint64_t issued() const { return issued_; }
  std::uint64_t completed() const { return completed_; }
  bool finished() const { return stopping_ || in_flight_ == 0; }

  std::uint64_t next_lba();  // exposed for distribution tests

 private:
  void submit_one();
  void on_complete();

  Ssd& ssd_;
  SyntheticSpec spec_;
  Rng rng_;
  std::uint64_t span_sectors_;
  std::uint32_t sectors_per_io_;
  std::uint64_t seq_cursor_ = 0;
  std::uint64_t next_id_ = 1;
  std::uint64_t issued_ = 0;
  std::uint64_t completed_ = 0;
  std::uint64_t limit_ = 0;
  std::uint32_t in_flight_ = 0;
  bool stopping_ = false;
};

// One block I/O trace line: DiskSim-style ASCII, five whitespace-separated
// fields per record. Flags bit 0 set marks a read.
struct TraceRecord {
  double arrival_ms = 0.0;
  std::uint32_t device = 0;
  std::uint64_t lba = 0;
  std::uint32_t sectors = 1;
  std::uint32_t flags = 0;

  bool is_read() const { return flags & 1u; }
};

struct TraceSummary {
  std::uint64_t count = 0;
  std::uint64_t read_commands = 0;
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
  std::uint64_t wrapped = 0;  // records with LBA beyond the device capacity
  double read_ratio_by_command = 0.0;
  double read_ratio_by_bytes = 0.0;
  double avg_read_bytes = 0.0;
  double avg_write_bytes = 0.0;
};

// Parses the DiskSim five-field layout, or a CSV alternate
// (`arrival_ms,lba,sectors,R|W`) when csv is true. Malformed lines report
// their number.
std::vector<TraceRecord> parse_trace(std::istream& in, bool csv = false);
std::vector<TraceRecord> parse_trace_file(const std::string& path, bool csv = false);

TraceSummary summarize(const std::vector<TraceRecord>& records,
                       std::uint64_t capacity_sectors, std::uint32_t sector_bytes);

// Replays a trace. Closed loop ignores arrival times and keeps `outstanding`
// in flight; open loop honors them (admission still capped).
class TraceDriver {
 public:
  TraceDriver(Ssd& ssd, std::vector<TraceRecord> records, bool open_loop,
              std::uint32_t outstanding);
  void start();
  bool done() const { return completed_ == records_.size(); }
  std::uint64_t completed() const { return completed_; }

 private:
  void submit_next();
  ftl::HostCommand command_for(const TraceRecord& rec);

  Ssd& ssd_;
  std::vector<TraceRecord> records_;
  bool open_loop_;
  std::uint32_t outstanding_;
  std::size_t cursor_ = 0;
  std::uint64_t completed_ = 0;
  std::uint32_t in_flight_ = 0;
  std::uint64_t next_id_ = 1;
};

// Experiment preconditioning: sequential fill over the whole span; write
// tests add random writes until the first GC victim has been selected.
void precondition_fill(Ssd& ssd);
void precondition_random_until_gc(Ssd& ssd, std::uint32_t io_bytes,
                                  std::uint64_t seed);

}  // namespace ssdsim::workload
