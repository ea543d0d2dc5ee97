#include "nand/nand_flash.hpp"

#include <algorithm>
#include <string>

namespace ssdsim::nand {

const char* to_string(FlashOpKind kind) {
  switch (kind) {
    case FlashOpKind::ReadPage: return "read";
    case FlashOpKind::ProgramPage: return "program";
    case FlashOpKind::EraseBlock: return "erase";
    case FlashOpKind::MultiPlaneRead: return "mp_read";
    case FlashOpKind::MultiPlaneProgram: return "mp_program";
    case FlashOpKind::OneShotProgram: return "oneshot_program";
  }
  return "?";
}

const char* to_string(Violation v) {
  switch (v) {
    case Violation::Ok: return "ok";
    case Violation::SequentialProgram: return "sequential_program_violation";
    case Violation::EraseBeforeProgram: return "erase_before_program_violation";
    case Violation::EnduranceExceeded: return "endurance_exceeded";
    case Violation::ReadUnwritten: return "read_unwritten";
    case Violation::BadTargets: return "bad_targets";
  }
  return "?";
}

NandFlash::NandFlash(EventEngine& engine, BusyLedger& ledger, NandGeometry geometry,
                     NandTiming timing, std::uint32_t oob_tags_per_page)
    : engine_(engine),
      ledger_(ledger),
      geometry_(geometry),
      timing_(timing),
      oob_tags_per_page_(oob_tags_per_page) {
  geometry_.validate();
  timing_.validate();
  SSDSIM_CHECK(oob_tags_per_page_ * 4 <= geometry_.page_oob_bytes);
  chips_.resize(geometry_.chip_count());
  channels_.resize(geometry_.channels);
  blocks_.resize(geometry_.block_count());
  stats_.channel_bytes.resize(geometry_.channels, 0);
  for (std::uint32_t c = 0; c < geometry_.channels; ++c)
    bus_comp_.push_back(engine_.register_component("nand_bus." + std::to_string(c)));
  for (std::uint32_t c = 0; c < geometry_.channels; ++c)
    for (std::uint32_t w = 0; w < geometry_.ways_per_channel; ++w)
      chip_comp_.push_back(engine_.register_component(
          "nand_chip." + std::to_string(c) + "." + std::to_string(w)));
}

Violation NandFlash::check_constraints(const FlashOperation& op) const {
  if (op.targets.empty()) return Violation::BadTargets;
  for (const auto& t : op.targets)
    if (!geometry_.contains(t)) return Violation::BadTargets;
  const PageAddress& first = op.targets.front();
  for (const auto& t : op.targets)
    if (t.channel != first.channel || t.way != first.way) return Violation::BadTargets;

  switch (op.kind) {
    case FlashOpKind::ReadPage:
      if (op.targets.size() != 1) return Violation::BadTargets;
      break;
    case FlashOpKind::ProgramPage:
      if (op.targets.size() != 1) return Violation::BadTargets;
      break;
    case FlashOpKind::EraseBlock: {
      if (op.targets.size() != 1) return Violation::BadTargets;
      const BlockState& st = block_state(first);
      if (st.erase_pending || st.pending_programs > 0) return Violation::BadTargets;
      if (st.erase_count + 1 > timing_.endurance_limit) return Violation::EnduranceExceeded;
      return Violation::Ok;
    }
    case FlashOpKind::MultiPlaneRead:
    case FlashOpKind::MultiPlaneProgram: {
      // One page per plane, same block/page offset across planes of one chip.
      if (op.targets.size() < 2 || op.targets.size() > geometry_.planes_per_chip)
        return Violation::BadTargets;
      std::uint32_t seen = 0;
      for (const auto& t : op.targets) {
        if (t.block != first.block || t.page != first.page) return Violation::BadTargets;
        if (seen & (1u << t.plane)) return Violation::BadTargets;
        seen |= 1u << t.plane;
      }
      break;
    }
    case FlashOpKind::OneShotProgram: {
      // Per plane: a word-line-aligned run of consecutive pages; the same
      // block/page offsets on every plane involved.
      std::vector<std::vector<std::uint32_t>> pages(geometry_.planes_per_chip);
      for (const auto& t : op.targets) {
        if (t.block != first.block) return Violation::BadTargets;
        pages[t.plane].push_back(t.page);
      }
      const std::vector<std::uint32_t>* ref = nullptr;
      for (auto& p : pages) {
        if (p.empty()) continue;
        std::sort(p.begin(), p.end());
        if (p.size() > timing_.wordline_group_size) return Violation::BadTargets;
        if (p.front() % timing_.wordline_group_size != 0) return Violation::BadTargets;
        for (std::size_t i = 1; i < p.size(); ++i)
          if (p[i] != p[i - 1] + 1) return Violation::BadTargets;
        if (ref && *ref != p) return Violation::BadTargets;
        if (!ref) ref = &p;
      }
      break;
    }
  }

  if (op.is_program()) {
    if (op.writes.size() != op.targets.size()) return Violation::BadTargets;
    // Simulate the per-block page cursor over the op's own targets so a
    // one-shot pair (page k, k+1) validates as a unit.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> cursor;  // block idx -> next
    for (const auto& t : op.targets) {
      const BlockState& st = block_state(t);
      if (st.erase_pending) return Violation::BadTargets;
      std::uint32_t next = st.next_program_page;
      for (auto& c : cursor)
        if (c.first == geometry_.block_index(t)) next = c.second;
      if (t.page < next) return Violation::EraseBeforeProgram;
      if (t.page > next) return Violation::SequentialProgram;
      bool found = false;
      for (auto& c : cursor)
        if (c.first == geometry_.block_index(t)) { c.second = t.page + 1; found = true; }
      if (!found) cursor.emplace_back(geometry_.block_index(t), t.page + 1);
    }
  } else if (op.is_read()) {
    for (const auto& t : op.targets) {
      const BlockState& st = block_state(t);
      if (st.erase_pending) return Violation::BadTargets;
      if (Violation v = check_page_read(st, t.page); v != Violation::Ok) return v;
    }
  }
  return Violation::Ok;
}

void NandFlash::apply_page_write(const PageAddress& addr, const PageWrite& write) {
  BlockState& st = blocks_[geometry_.block_index(addr)];
  if (st.oob.empty()) {
    st.oob.assign(static_cast<std::size_t>(geometry_.pages_per_block) * oob_tags_per_page_,
                  kUnmapped);
    st.oob_kind.assign(geometry_.pages_per_block, OobKind::None);
    st.payloads.resize(geometry_.pages_per_block);
  }
  SSDSIM_CHECK(write.tags.size() <= oob_tags_per_page_);
  std::copy(write.tags.begin(), write.tags.end(),
            st.oob.begin() + static_cast<std::size_t>(addr.page) * oob_tags_per_page_);
  st.oob_kind[addr.page] = write.kind;
  st.payloads[addr.page] = write.payload;
  st.next_program_page = addr.page + 1;
}

void NandFlash::reserve_program(const FlashOperation& op) {
  for (std::size_t i = 0; i < op.targets.size(); ++i) {
    apply_page_write(op.targets[i], op.writes[i]);
    blocks_[geometry_.block_index(op.targets[i])].pending_programs++;
  }
}

void NandFlash::bootstrap_program(const PageAddress& addr, PageWrite write) {
  SSDSIM_CHECK(engine_.now() == 0);
  const BlockState& st = block_state(addr);
  SSDSIM_CHECK(check_page_program(st, addr.page) == Violation::Ok);
  apply_page_write(addr, write);
}

void NandFlash::submit(FlashOperation op) {
  Violation v = check_constraints(op);
  if (v == Violation::EnduranceExceeded) {
    ++stats_.endurance_warnings;
  } else {
    SSDSIM_CHECK_MSG(v == Violation::Ok, to_string(v) << " on " << to_string(op.kind));
  }

  if (op.is_program()) reserve_program(op);
  if (op.kind == FlashOpKind::EraseBlock)
    blocks_[geometry_.block_index(op.targets.front())].erase_pending = true;

  std::uint32_t chip = geometry_.chip_index(op.targets.front().channel,
                                            op.targets.front().way);
  bool is_read = op.is_read();
  auto& queue = is_read ? chips_[chip].read_queue : chips_[chip].write_queue;
  queue.push_back(PendingOp{std::move(op)});
  try_start(chip);
}

void NandFlash::try_start(std::uint32_t chip_index) {
  Chip& chip = chips_[chip_index];
  while (true) {
    // The head program prefetches its data-in regardless of read priority.
    if (!chip.write_queue.empty()) {
      PendingOp& whead = chip.write_queue.front();
      if (whead.op.is_program() && !whead.data_in_started) {
        whead.data_in_started = true;
        std::uint32_t channel = whead.op.targets.front().channel;
        request_bus(channel, whead.op.transfer_bytes, [this, chip_index] {
          Chip& c = chips_[chip_index];
          SSDSIM_CHECK(!c.write_queue.empty() &&
                       c.write_queue.front().data_in_started);
          c.write_queue.front().data_in_done = true;
          try_start(chip_index);
        });
      }
    }
    if (chip.cell_active) return;

    std::deque<PendingOp>* queue = nullptr;
    if (!chip.read_queue.empty()) {
      queue = &chip.read_queue;
    } else if (!chip.write_queue.empty()) {
      PendingOp& whead = chip.write_queue.front();
      if (whead.op.is_program() && !whead.data_in_done) return;
      queue = &chip.write_queue;
    } else {
      return;
    }

    PendingOp pending = std::move(queue->front());
    queue->pop_front();
    chip.cell_active = true;
    SimTime start = engine_.now();
    SimTime duration = cell_time(timing_, pending.op.kind);
    engine_.schedule_in(duration, chip_comp_[chip_index],
                        [this, chip_index, start, p = std::move(pending)]() mutable {
                          on_cell_end(chip_index, std::move(p), start);
                        });
    // Loop: the next program may begin its data-in under this cell.
  }
}

FlashResult NandFlash::snapshot_read(const FlashOperation& op) const {
  FlashResult result;
  result.kind = op.kind;
  for (const auto& t : op.targets) {
    const BlockState& st = block_state(t);
    PageSnapshot snap;
    snap.addr = t;
    if (!st.oob.empty()) {
      snap.kind = st.oob_kind[t.page];
      auto begin = st.oob.begin() + static_cast<std::size_t>(t.page) * oob_tags_per_page_;
      snap.tags.assign(begin, begin + oob_tags_per_page_);
      snap.payload = st.payloads[t.page];
    }
    result.pages.push_back(std::move(snap));
  }
  return result;
}

void NandFlash::on_cell_end(std::uint32_t chip_index, PendingOp pending, SimTime cell_start) {
  Chip& chip = chips_[chip_index];
  ledger_.mark_busy(chip_comp_[chip_index], cell_start, engine_.now());
  chip.cell_active = false;

  FlashOperation& op = pending.op;
  if (op.is_read()) {
    // Data moves from the array to the page register at cell end; a later
    // erase cannot corrupt a transfer already in flight.
    auto result = std::make_shared<FlashResult>(snapshot_read(op));
    std::uint32_t channel = op.targets.front().channel;
    request_bus(channel, op.transfer_bytes,
                [this, kind = op.kind, bytes = op.transfer_bytes,
                 cb = std::move(op.on_complete), result] {
                  stats_.ops_by_kind[static_cast<std::size_t>(kind)]++;
                  stats_.read_bytes += bytes;
                  if (cb) cb(std::move(*result));
                });
  } else if (op.is_program()) {
    for (const auto& t : op.targets) {
      BlockState& st = blocks_[geometry_.block_index(t)];
      SSDSIM_CHECK(st.pending_programs > 0);
      st.pending_programs--;
    }
    stats_.ops_by_kind[static_cast<std::size_t>(op.kind)]++;
    stats_.program_bytes += op.transfer_bytes;
    if (op.on_complete) op.on_complete(FlashResult{op.kind, {}});
  } else {  // erase
    stats_.ops_by_kind[static_cast<std::size_t>(op.kind)]++;
    BlockState& st = blocks_[geometry_.block_index(op.targets.front())];
    st.next_program_page = 0;
    st.erase_count++;
    st.erase_pending = false;
    st.oob.clear();
    st.oob_kind.clear();
    st.payloads.clear();
    if (op.on_complete) op.on_complete(FlashResult{op.kind, {}});
  }
  try_start(chip_index);
}

void NandFlash::request_bus(std::uint32_t channel, std::uint64_t bytes,
                            std::function<void()> cb) {
  channels_[channel].queue.push_back(BusRequest{bytes, std::move(cb)});
  try_bus(channel);
}

void NandFlash::try_bus(std::uint32_t channel) {
  Channel& ch = channels_[channel];
  if (ch.busy || ch.queue.empty()) return;
  BusRequest req = std::move(ch.queue.front());
  ch.queue.pop_front();
  ch.busy = true;
  SimTime start = engine_.now();
  SimTime duration = timing_.bus_time(req.bytes);
  engine_.schedule_in(duration, bus_comp_[channel],
                      [this, channel, start, req = std::move(req)] {
                        ledger_.mark_busy(bus_comp_[channel], start, engine_.now());
                        stats_.channel_bytes[channel] += req.bytes;
                        channels_[channel].busy = false;
                        if (req.on_done) req.on_done();
                        try_bus(channel);
                      });
}

}  // namespace ssdsim::nand
