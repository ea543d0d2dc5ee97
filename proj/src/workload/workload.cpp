#include "workload/workload.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ssdsim::workload {

const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::RandRead: return "rand_read";
    case Pattern::RandWrite: return "rand_write";
    case Pattern::SeqRead: return "seq_read";
    case Pattern::SeqWrite: return "seq_write";
  }
  return "?";
}

bool pattern_is_write(Pattern p) {
  return p == Pattern::RandWrite || p == Pattern::SeqWrite;
}

SyntheticDriver::SyntheticDriver(Ssd& ssd, SyntheticSpec spec)
    : ssd_(ssd), spec_(spec), rng_(spec.seed) {
  span_sectors_ = spec_.span_sectors ? spec_.span_sectors : ssd_.user_sectors();
  SSDSIM_CHECK(span_sectors_ <= ssd_.user_sectors());
  sectors_per_io_ = spec_.io_bytes / ssd_.layout.sector_bytes;
  SSDSIM_CHECK(sectors_per_io_ >= 1 && span_sectors_ >= sectors_per_io_);
}

std::uint64_t SyntheticDriver::next_lba() {
  std::uint64_t ios_in_span = span_sectors_ / sectors_per_io_;
  switch (spec_.pattern) {
    case Pattern::RandRead:
    case Pattern::RandWrite:
      return rng_.below(ios_in_span) * sectors_per_io_;
    case Pattern::SeqRead:
    case Pattern::SeqWrite: {
      std::uint64_t lba = seq_cursor_;
      seq_cursor_ += sectors_per_io_;
      if (seq_cursor_ + sectors_per_io_ > span_sectors_) seq_cursor_ = 0;
      return lba;
    }
  }
  return 0;
}

void SyntheticDriver::start(std::uint64_t command_limit) {
  limit_ = command_limit;
  stopping_ = false;
  while (in_flight_ < spec_.outstanding && (limit_ == 0 || issued_ < limit_))
    submit_one();
}

void SyntheticDriver::submit_one() {
  ftl::HostCommand cmd;
  cmd.id = next_id_++;
  cmd.is_write = pattern_is_write(spec_.pattern);
  cmd.lba = next_lba();
  cmd.sectors = sectors_per_io_;
  cmd.arrival = ssd_.engine.now();
  issued_++;
  in_flight_++;
  ssd_.submit(cmd, [this](const ftl::HostCommand&) { on_complete(); });
}

void SyntheticDriver::on_complete() {
  in_flight_--;
  completed_++;
  if (stopping_ || (limit_ != 0 && issued_ >= limit_)) return;
  if (spec_.inter_arrival == 0) {
    submit_one();
  } else {
    ssd_.engine.schedule_in(spec_.inter_arrival, 0, [this] {
      if (!stopping_ && (limit_ == 0 || issued_ < limit_)) submit_one();
    });
  }
}

std::vector<TraceRecord> parse_trace(std::istream& in, bool csv) {
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    TraceRecord rec;
    if (csv) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      std::string rw;
      if (!(ls >> rec.arrival_ms >> rec.lba >> rec.sectors >> rw) ||
          (rw != "R" && rw != "W")) {
        throw ConfigError("trace parse error at line " + std::to_string(line_no));
      }
      rec.flags = rw == "R" ? 1 : 0;
    } else {
      std::istringstream ls(line);
      if (!(ls >> rec.arrival_ms >> rec.device >> rec.lba >> rec.sectors >>
            rec.flags)) {
        throw ConfigError("trace parse error at line " + std::to_string(line_no));
      }
    }
    if (rec.sectors < 1)
      throw ConfigError("trace parse error at line " + std::to_string(line_no) +
                        ": zero-length request");
    records.push_back(rec);
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const TraceRecord& a, const TraceRecord& b) {
                     return a.arrival_ms < b.arrival_ms;
                   });
  return records;
}

std::vector<TraceRecord> parse_trace_file(const std::string& path, bool csv) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  return parse_trace(in, csv);
}

TraceSummary summarize(const std::vector<TraceRecord>& records,
                       std::uint64_t capacity_sectors, std::uint32_t sector_bytes) {
  TraceSummary s;
  s.count = records.size();
  for (const auto& r : records) {
    std::uint64_t bytes = static_cast<std::uint64_t>(r.sectors) * sector_bytes;
    if (r.is_read()) {
      s.read_commands++;
      s.read_bytes += bytes;
    } else {
      s.write_bytes += bytes;
    }
    if (capacity_sectors && r.lba >= capacity_sectors) s.wrapped++;
  }
  std::uint64_t writes = s.count - s.read_commands;
  if (s.count) s.read_ratio_by_command = static_cast<double>(s.read_commands) / s.count;
  if (s.read_bytes + s.write_bytes)
    s.read_ratio_by_bytes =
        static_cast<double>(s.read_bytes) / (s.read_bytes + s.write_bytes);
  if (s.read_commands) s.avg_read_bytes = static_cast<double>(s.read_bytes) / s.read_commands;
  if (writes) s.avg_write_bytes = static_cast<double>(s.write_bytes) / writes;
  return s;
}

TraceDriver::TraceDriver(Ssd& ssd, std::vector<TraceRecord> records, bool open_loop,
                         std::uint32_t outstanding)
    : ssd_(ssd), records_(std::move(records)), open_loop_(open_loop),
      outstanding_(outstanding) {}

ftl::HostCommand TraceDriver::command_for(const TraceRecord& rec) {
  ftl::HostCommand cmd;
  cmd.id = next_id_++;
  cmd.is_write = !rec.is_read();
  // LBAs beyond the advertised capacity wrap (documented normalization).
  std::uint64_t capacity = ssd_.user_sectors();
  cmd.lba = rec.lba % capacity;
  cmd.sectors = static_cast<std::uint32_t>(
      std::min<std::uint64_t>(rec.sectors, capacity - cmd.lba));
  cmd.arrival = ssd_.engine.now();
  return cmd;
}

void TraceDriver::start() {
  if (open_loop_) {
    // Schedule every arrival up front; admission contention is the host
    // interface's business.
    for (const auto& rec : records_) {
      SimTime at = static_cast<SimTime>(rec.arrival_ms * 1e6);
      ssd_.engine.schedule_at(at, 0, [this, rec] {
        ssd_.submit(command_for(rec),
                    [this](const ftl::HostCommand&) { completed_++; });
      });
    }
    return;
  }
  while (in_flight_ < outstanding_ && cursor_ < records_.size()) submit_next();
}

void TraceDriver::submit_next() {
  const TraceRecord& rec = records_[cursor_++];
  in_flight_++;
  ssd_.submit(command_for(rec), [this](const ftl::HostCommand&) {
    completed_++;
    in_flight_--;
    if (cursor_ < records_.size()) submit_next();
  });
}

void precondition_fill(Ssd& ssd) {
  SyntheticSpec spec;
  spec.pattern = Pattern::SeqWrite;
  spec.io_bytes = 256 * 1024;
  spec.outstanding = 64;
  SyntheticDriver fill(ssd, spec);
  std::uint64_t commands = ssd.user_sectors() * ssd.layout.sector_bytes /
                           spec.io_bytes;
  fill.start(commands);
  ssd.drain();
  SSDSIM_CHECK(fill.completed() == commands);
}

void precondition_random_until_gc(Ssd& ssd, std::uint32_t io_bytes,
                                  std::uint64_t seed) {
  SyntheticSpec spec;
  spec.pattern = Pattern::RandWrite;
  spec.io_bytes = io_bytes;
  spec.outstanding = 512;
  spec.seed = seed;
  SyntheticDriver writer(ssd, spec);
  writer.start(0);
  // Step until the first victim selection fires, then let in-flight work
  // settle. The measurement window opens after this returns.
  while (ssd.stats.gc_victims == 0) {
    std::size_t n = ssd.engine.run_until(ssd.engine.now() + ms(1));
    SSDSIM_CHECK_MSG(n > 0 || !ssd.engine.empty(),
                     "random preconditioning stalled before GC triggered");
  }
  writer.stop();
  ssd.drain();
}

}  // namespace ssdsim::workload
