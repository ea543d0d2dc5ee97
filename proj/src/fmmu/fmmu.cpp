#include "fmmu/fmmu.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <ostream>

namespace ssdsim::fmmu {

namespace {
bool is_pow2(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }
}  // namespace

SplitAddress split_dlpn(Dlpn dlpn, std::uint32_t entries_per_translation_page,
                        std::uint32_t entries_per_cmt_block, std::uint32_t cmt_sets) {
  SSDSIM_CHECK(is_pow2(entries_per_translation_page) && is_pow2(entries_per_cmt_block));
  SplitAddress out;
  out.tvpn = dlpn / entries_per_translation_page;
  out.slice = (dlpn % entries_per_translation_page) / entries_per_cmt_block;
  std::uint32_t group = dlpn / entries_per_cmt_block;
  out.set = group % cmt_sets;
  out.tag = group / cmt_sets;
  return out;
}

Fmmu::Fmmu(EventEngine& engine, BusyLedger* ledger, ftl::TranslationBackend& backend,
           FmmuConfig config, std::size_t total_dlpns)
    : engine_(engine),
      ledger_(ledger),
      backend_(backend),
      config_(config),
      entries_per_tp_(backend.entries_per_page()),
      cmt_entries_per_block_(config.cmt_block_bytes / config.entry_bytes),
      cmt_mshr_cap_(std::max(1u, config.cmt_block_bytes / config.mshr_bytes)),
      ctp_mshr_cap_(std::max(1u, entries_per_tp_ * config.entry_bytes / config.mshr_bytes)),
      total_dlpns_(static_cast<std::uint32_t>(total_dlpns)),
      cmt_(std::max(1u, config.cmt_bytes / config.cmt_block_bytes / config.ways),
           config.ways),
      ctp_(std::max(1u, config.ctp_bytes / (entries_per_tp_ * config.entry_bytes) /
                            config.ways),
           config.ways) {
  SSDSIM_CHECK(is_pow2(cmt_entries_per_block_) && is_pow2(entries_per_tp_));
  cmt_comp_ = engine_.register_component("fmmu_cmt");
  ctp_comp_ = engine_.register_component("fmmu_ctp");
}

std::uint32_t Fmmu::gcm_weight() const {
  double fraction = gc_victim_fraction_ ? gc_victim_fraction_() : 0.0;
  fraction = std::clamp(fraction, 0.0, 1.0);
  auto w = static_cast<std::uint32_t>(std::lround(config_.gcm_weight_max * fraction));
  return std::clamp(w, 1u, config_.gcm_weight_max);
}

void Fmmu::submit(ftl::MapRequest req) {
  if (req.origin == ftl::MapOrigin::Hrm)
    hrm_req_.push_back(req);
  else
    gcm_req_.push_back(req);
  cmt_kick();
}

void Fmmu::respond_map(const ftl::MapResponse& resp, ftl::MapOrigin origin) {
  emit(TraceStep::CmtResponseSent, resp.dlpn, origin == ftl::MapOrigin::Hrm ? 0 : 1);
  respond(resp, origin);
}

void Fmmu::unblock_all() {
  hrm_blocked_ = gcm_blocked_ = cmt_req_blocked_ = false;
  cmt_stalled_set_.reset();
  ctp_stalled_set_.reset();
  cmt_kick();
  ctp_kick();
}

// ---------------------------------------------------------------------------
// CMT machine
// ---------------------------------------------------------------------------

void Fmmu::cmt_kick() {
  if (cmt_busy_) return;

  std::uint32_t low = static_cast<std::uint32_t>(config_.watermark_low *
                                                 cmt_.block_count());
  std::uint32_t high = static_cast<std::uint32_t>(config_.watermark_high *
                                                  cmt_.block_count());
  if (!cmt_flushing_mode_ && cmt_non_dirty() <= low) {
    cmt_flushing_mode_ = true;
    cmt_flush_turn_ = true;
  }
  if (cmt_flushing_mode_ && cmt_non_dirty() >= high) cmt_flushing_mode_ = false;

  bool request_ready = (!hrm_blocked_ && !hrm_req_.empty()) ||
                       (!gcm_blocked_ && !gcm_req_.empty()) || !ctp_resp_.empty();
  bool flush_ready = !dtl_.empty();
  std::uint32_t dirty_threshold = static_cast<std::uint32_t>(
      config_.cmt_dirty_threshold * cmt_.block_count());
  bool stall_flush = cmt_stalled_set_ && dtl_victim_in_set(*cmt_stalled_set_).has_value();

  bool do_flush;
  if (stall_flush) {
    do_flush = true;
  } else if (drain_done_) {
    if (request_ready)
      do_flush = false;
    else if (flush_ready)
      do_flush = true;
    else {
      check_drained();
      return;
    }
  } else if (cmt_flushing_mode_ && flush_ready) {
    do_flush = cmt_flush_turn_ || !request_ready;
  } else if (request_ready) {
    do_flush = false;
  } else if (flush_ready && cmt_dirty_ > dirty_threshold) {
    do_flush = true;  // background flush pressure with an idle request path
  } else {
    check_drained();
    return;
  }

  cmt_busy_ = true;
  SimTime start = engine_.now();
  SimTime duration = do_flush ? config_.service_ns * (1 + config_.flush_burst_blocks)
                              : config_.service_ns;
  engine_.schedule_in(duration, cmt_comp_, [this, start, do_flush] {
    if (ledger_) ledger_->mark_busy(cmt_comp_, start, engine_.now());
    cmt_busy_ = false;
    if (do_flush) {
      cmt_flush_burst();
      cmt_flush_turn_ = false;
    } else {
      if (!cmt_try_service() && cmt_flushing_mode_) {
        // Nothing serviceable this slot; hand the turn back to flushing.
      }
      cmt_flush_turn_ = true;
    }
    cmt_kick();
    check_drained();
  });
}

bool Fmmu::cmt_try_service() {
  // Weighted round robin: CTP responses outrank HRM/GCM requests; the GCM
  // share follows the current victim's valid-page count.
  auto weight = [this](std::uint32_t q) {
    if (q == 0) return config_.response_weight;
    if (q == 1) return config_.request_weight;
    return gcm_weight();
  };
  auto empty_or_blocked = [this](std::uint32_t q) {
    if (q == 0) return ctp_resp_.empty();
    if (q == 1) return hrm_blocked_ || hrm_req_.empty();
    return gcm_blocked_ || gcm_req_.empty();
  };

  for (std::uint32_t tries = 0; tries < 6; ++tries) {
    if (!empty_or_blocked(cmt_arb_queue_) && cmt_arb_credit_ > 0) break;
    cmt_arb_queue_ = (cmt_arb_queue_ + 1) % 3;
    cmt_arb_credit_ = weight(cmt_arb_queue_);
  }
  if (empty_or_blocked(cmt_arb_queue_) || cmt_arb_credit_ == 0) return false;
  cmt_arb_credit_--;

  if (cmt_arb_queue_ == 0) {
    CtpResponse resp = std::move(ctp_resp_.front());
    ctp_resp_.pop_front();
    cmt_process_ctp_response(resp);
    return true;
  }

  auto& queue = cmt_arb_queue_ == 1 ? hrm_req_ : gcm_req_;
  ftl::MapRequest req = queue.front();
  queue.pop_front();
  bool stalled = false;
  cmt_process_request(req, stalled);
  if (stalled) {
    queue.push_front(req);
    (cmt_arb_queue_ == 1 ? hrm_blocked_ : gcm_blocked_) = true;
    stats_.stalls++;
  }
  return true;
}

bool Fmmu::cmt_apply_to_block(CmtBlock& block, std::uint32_t set, std::uint32_t way,
                              const ftl::MapRequest& req) {
  SplitAddress a = split(req.dlpn);
  std::uint32_t idx = req.dlpn % cmt_entries_per_block_;
  ftl::MapResponse resp;
  resp.tag = req.tag;
  resp.dlpn = req.dlpn;
  resp.kind = req.kind;
  block.referenced = true;

  switch (req.kind) {
    case ftl::MapOp::Lookup: {
      resp.dppn = block.entries[idx];
      resp.status = resp.dppn == kUnmapped ? ftl::MapStatus::Unmapped
                                           : ftl::MapStatus::Ok;
      respond_map(resp, req.origin);
      return false;
    }
    case ftl::MapOp::Update: {
      resp.prev_dppn = block.entries[idx];
      block.entries[idx] = req.new_dppn;
      resp.dppn = req.new_dppn;
      resp.status = ftl::MapStatus::Ok;
      emit(TraceStep::CmtUpdateApplied, req.dlpn, req.new_dppn);
      observe_apply(req, true);
      if (block.state != CacheState::Dirty) {
        block.state = CacheState::Dirty;
        cmt_dirty_++;
        dtl_register(a.tvpn, set, way);
      } else {
        dtl_touch(a.tvpn);
      }
      respond_map(resp, req.origin);
      return true;
    }
    case ftl::MapOp::CondUpdate: {
      if (block.entries[idx] == req.old_dppn) {
        block.entries[idx] = req.new_dppn;
        resp.dppn = req.new_dppn;
        resp.prev_dppn = req.old_dppn;
        resp.status = ftl::MapStatus::Ok;
        emit(TraceStep::CmtUpdateApplied, req.dlpn, req.new_dppn);
        observe_apply(req, true);
        if (block.state != CacheState::Dirty) {
          block.state = CacheState::Dirty;
          cmt_dirty_++;
          dtl_register(a.tvpn, set, way);
        } else {
          dtl_touch(a.tvpn);
        }
        respond_map(resp, req.origin);
        return true;
      }
      resp.dppn = block.entries[idx];
      resp.status = ftl::MapStatus::Stale;
      observe_apply(req, false);
      respond_map(resp, req.origin);
      return false;
    }
  }
  return false;
}

void Fmmu::cmt_process_request(const ftl::MapRequest& req, bool& stalled) {
  SplitAddress a = split(req.dlpn);
  auto way = cmt_.find(a.set, a.tag);

  if (way) {
    CmtBlock& block = cmt_.at(a.set, *way);
    if (block.state == CacheState::Transient) {
      // Coalesce onto the outstanding miss; no second CTP load.
      if (block.mshrs.size() >= cmt_mshr_cap_) {
        stalled = true;
        return;
      }
      block.mshrs.push_back(Mshr{req});
      mshr_records_live_++;
      emit(TraceStep::CmtMshrLogged, req.dlpn, static_cast<std::uint64_t>(req.kind));
      return;
    }
    stats_.cmt_hits++;
    emit(TraceStep::CmtHit, req.dlpn);
    cmt_apply_to_block(block, a.set, *way, req);
    return;
  }

  stats_.cmt_misses++;
  emit(TraceStep::CmtMiss, req.dlpn);
  auto victim = cmt_.select_victim(a.set);
  if (!victim) {
    stalled = true;  // all ways dirty or transient; wait for a flush
    cmt_stalled_set_ = a.set;
    return;
  }
  CmtBlock& block = cmt_.at(a.set, *victim);
  SSDSIM_CHECK(!block.in_chain);
  block.state = CacheState::Transient;
  cmt_transient_++;
  block.tag = a.tag;
  block.referenced = false;
  block.entries.clear();  // payload area is repurposed for the MSHR log
  block.mshrs.clear();
  block.mshrs.push_back(Mshr{req});
  mshr_records_live_++;
  emit(TraceStep::CmtVictimAllocated, a.set, *victim);
  emit(TraceStep::CmtMshrLogged, req.dlpn, static_cast<std::uint64_t>(req.kind));

  stats_.ctp_loads++;
  emit(TraceStep::CmtLoadIssued, a.tvpn, a.slice);
  CtpRequest load;
  load.is_flush = false;
  load.tvpn = a.tvpn;
  load.slice = a.slice;
  load.cmt_set = a.set;
  load.cmt_way = *victim;
  cmt_req_.push_back(std::move(load));
  ctp_kick();
}

void Fmmu::cmt_process_ctp_response(const CtpResponse& resp) {
  CmtBlock& block = cmt_.at(resp.cmt_set, resp.cmt_way);
  SSDSIM_CHECK(block.state == CacheState::Transient);
  block.entries = resp.slice_entries;
  block.state = CacheState::Clean;
  cmt_transient_--;
  block.referenced = true;
  emit(TraceStep::CmtFilled, resp.tvpn);

  // Answer every logged MSHR in arrival order; one response packet serves
  // the whole batch.
  std::vector<Mshr> mshrs = std::move(block.mshrs);
  block.mshrs.clear();
  SSDSIM_CHECK(mshr_records_live_ >= mshrs.size());
  mshr_records_live_ -= mshrs.size();
  for (const Mshr& m : mshrs)
    cmt_apply_to_block(cmt_.at(resp.cmt_set, resp.cmt_way), resp.cmt_set,
                       resp.cmt_way, m.request);
  unblock_all();
}

void Fmmu::dtl_register(Tvpn tvpn, std::uint32_t set, std::uint32_t way) {
  CmtBlock& block = cmt_.at(set, way);
  if (block.in_chain) return;  // idempotent
  block.in_chain = true;
  auto it = dtl_index_.find(tvpn);
  if (it == dtl_index_.end()) {
    block.has_next = false;
    dtl_.push_back(DtlEntry{tvpn, set, way, 1, true});
    dtl_index_[tvpn] = std::prev(dtl_.end());
    emit(TraceStep::DtlNewEntryRegistered, tvpn, set, way);
  } else {
    DtlEntry& entry = *it->second;
    block.has_next = true;
    block.next_set = entry.head_set;
    block.next_way = entry.head_way;
    entry.head_set = set;
    entry.head_way = way;
    entry.dirty_count++;
    entry.updated = true;
    emit(TraceStep::DtlChainPushFront, tvpn, set, way);
  }
}

void Fmmu::dtl_touch(Tvpn tvpn) {
  auto it = dtl_index_.find(tvpn);
  SSDSIM_CHECK(it != dtl_index_.end());
  it->second->updated = true;
}

std::optional<Tvpn> Fmmu::dtl_victim_in_set(std::uint32_t set) const {
  for (std::uint32_t w = 0; w < cmt_.ways(); ++w) {
    const CmtBlock& b = cmt_.at(set, w);
    if (b.state != CacheState::Dirty) continue;
    std::uint32_t group = b.tag * cmt_.sets() + set;
    return group * cmt_entries_per_block_ / entries_per_tp_;
  }
  return std::nullopt;
}

Tvpn Fmmu::cmt_select_flush_victim() {
  SSDSIM_CHECK(!dtl_.empty());
  if (cmt_stalled_set_) {
    if (auto forced = dtl_victim_in_set(*cmt_stalled_set_)) return *forced;
  }
  double best_score = -1.0;
  Tvpn best = dtl_.front().tvpn;
  std::size_t len = dtl_.size();
  std::size_t idx = 0;
  for (const DtlEntry& e : dtl_) {
    double rank = len > 1 ? 1.0 - static_cast<double>(idx) / (len - 1) : 1.0;
    double score = config_.weight_greedy * e.dirty_count +
                   config_.weight_oldest * rank +
                   config_.weight_lru * (e.updated ? 0.0 : 1.0);
    if (score > best_score) {
      best_score = score;
      best = e.tvpn;
    }
    idx++;
  }
  // Age the recency bits; fresh updates re-arm them.
  for (DtlEntry& e : dtl_) e.updated = false;
  return best;
}

bool Fmmu::cmt_flush_one() {
  if (dtl_.empty()) return false;
  Tvpn tvpn = cmt_select_flush_victim();
  auto it = dtl_index_.find(tvpn);
  SSDSIM_CHECK(it != dtl_index_.end());
  DtlEntry entry = *it->second;
  dtl_.erase(it->second);
  dtl_index_.erase(it);

  // Walk the next-link chain; gather every dirty block of this TVPN into one
  // batched CTP flush.
  CtpRequest flush;
  flush.is_flush = true;
  flush.tvpn = tvpn;
  std::uint32_t set = entry.head_set, way = entry.head_way;
  std::uint32_t visited = 0;
  bool more = true;
  while (more) {
    CmtBlock& block = cmt_.at(set, way);
    SSDSIM_CHECK(block.state == CacheState::Dirty && block.in_chain);
    std::uint32_t group = block.tag * cmt_.sets() + set;
    std::uint32_t base =
        (group * cmt_entries_per_block_) % entries_per_tp_;
    SSDSIM_CHECK(group * cmt_entries_per_block_ / entries_per_tp_ == tvpn);
    for (std::uint32_t e = 0; e < cmt_entries_per_block_; ++e)
      flush.pairs.emplace_back(base + e, block.entries[e]);
    block.state = CacheState::Clean;
    cmt_dirty_--;
    block.in_chain = false;
    more = block.has_next;
    std::uint32_t next_set = block.next_set, next_way = block.next_way;
    block.has_next = false;
    set = next_set;
    way = next_way;
    visited++;
  }
  SSDSIM_CHECK(visited == entry.dirty_count);
  stats_.cmt_flushes++;
  emit(TraceStep::CmtFlushIssued, tvpn, visited);
  cmt_req_.push_back(std::move(flush));
  ctp_kick();
  unblock_all();
  return true;
}

void Fmmu::cmt_flush_burst() {
  std::uint32_t cleaned = 0;
  while (cleaned < config_.flush_burst_blocks && !dtl_.empty()) {
    std::uint32_t before = cmt_dirty_;
    if (!cmt_flush_one()) break;
    cleaned += before - cmt_dirty_;
  }
}

// ---------------------------------------------------------------------------
// CTP machine
// ---------------------------------------------------------------------------

void Fmmu::ctp_kick() {
  if (ctp_busy_) return;

  std::uint32_t low = static_cast<std::uint32_t>(config_.watermark_low *
                                                 ctp_.block_count());
  std::uint32_t high = static_cast<std::uint32_t>(config_.watermark_high *
                                                  ctp_.block_count());
  if (!ctp_flushing_mode_ && ctp_non_dirty() <= low) {
    ctp_flushing_mode_ = true;
    ctp_flush_turn_ = true;
  }
  if (ctp_flushing_mode_ && ctp_non_dirty() >= high) ctp_flushing_mode_ = false;

  bool request_ready = !fc_resp_.empty() || !bm_resp_.empty() ||
                       (!cmt_req_blocked_ && !cmt_req_.empty());
  bool flush_ready = !ctp_flush_fifo_.empty() &&
                     ctp_programs_in_flight_ < config_.flush_burst_blocks;
  bool stall_flush = false;
  if (ctp_stalled_set_) {
    for (std::uint32_t w = 0; w < ctp_.ways(); ++w) {
      const CtpBlock& b = ctp_.at(*ctp_stalled_set_, w);
      if (b.state == CacheState::Dirty && !b.flushing) stall_flush = true;
    }
  }

  bool do_flush;
  if (stall_flush) {
    do_flush = true;
  } else if (drain_done_) {
    if (request_ready)
      do_flush = false;
    else if (flush_ready)
      do_flush = true;
    else {
      check_drained();
      return;
    }
  } else if (ctp_flushing_mode_ && flush_ready) {
    do_flush = ctp_flush_turn_ || !request_ready;
  } else if (request_ready) {
    do_flush = false;
  } else if (flush_ready && ctp_dirty_ > config_.ctp_dirty_threshold) {
    do_flush = true;
  } else {
    check_drained();
    return;
  }

  ctp_busy_ = true;
  SimTime start = engine_.now();
  SimTime duration = do_flush ? config_.service_ns * (1 + config_.flush_burst_blocks)
                              : config_.service_ns;
  engine_.schedule_in(duration, ctp_comp_, [this, start, do_flush] {
    if (ledger_) ledger_->mark_busy(ctp_comp_, start, engine_.now());
    ctp_busy_ = false;
    if (do_flush) {
      ctp_flush_burst();
      ctp_flush_turn_ = false;
    } else {
      ctp_try_service();
      ctp_flush_turn_ = true;
    }
    ctp_kick();
    check_drained();
  });
}

bool Fmmu::ctp_try_service() {
  auto weight = [this](std::uint32_t q) {
    return q == 2 ? config_.request_weight : config_.response_weight;
  };
  auto empty_or_blocked = [this](std::uint32_t q) {
    if (q == 0) return fc_resp_.empty();
    if (q == 1) return bm_resp_.empty();
    return cmt_req_blocked_ || cmt_req_.empty();
  };

  for (std::uint32_t tries = 0; tries < 6; ++tries) {
    if (!empty_or_blocked(ctp_arb_queue_) && ctp_arb_credit_ > 0) break;
    ctp_arb_queue_ = (ctp_arb_queue_ + 1) % 3;
    ctp_arb_credit_ = weight(ctp_arb_queue_);
  }
  if (empty_or_blocked(ctp_arb_queue_) || ctp_arb_credit_ == 0) return false;
  ctp_arb_credit_--;

  if (ctp_arb_queue_ == 0) {
    FlashReadDone done = std::move(fc_resp_.front());
    fc_resp_.pop_front();
    ctp_process_read_done(done);
    return true;
  }
  if (ctp_arb_queue_ == 1) {
    ProgramDone done = bm_resp_.front();
    bm_resp_.pop_front();
    ctp_process_program_done(done);
    return true;
  }
  CtpRequest req = std::move(cmt_req_.front());
  cmt_req_.pop_front();
  bool stalled = false;
  ctp_process_request(req, stalled);
  if (stalled) {
    cmt_req_.push_front(std::move(req));
    cmt_req_blocked_ = true;
    stats_.stalls++;
  }
  return true;
}

void Fmmu::ctp_merge(CtpBlock& block, std::uint32_t set, std::uint32_t way,
                     const std::vector<std::pair<std::uint32_t, Dppn>>& pairs) {
  for (const auto& [offset, dppn] : pairs) block.entries[offset] = dppn;
  if (block.state != CacheState::Dirty) {
    block.state = CacheState::Dirty;
    ctp_dirty_++;
  }
  if (block.flushing) block.redirtied = true;
  Tvpn tvpn = block.tag * ctp_.sets() + set;
  (void)way;
  if (!block.in_fifo) {
    // Flush order follows the order flush requests arrived from the CMT.
    block.in_fifo = true;
    ctp_flush_fifo_.push_back(tvpn);
  }
}

void Fmmu::ctp_process_request(CtpRequest& req, bool& stalled) {
  std::uint32_t set = req.tvpn % ctp_.sets();
  std::uint32_t tag = req.tvpn / ctp_.sets();
  auto way = ctp_.find(set, tag);

  if (way) {
    CtpBlock& block = ctp_.at(set, *way);
    if (block.state == CacheState::Transient) {
      std::uint32_t records = req.is_flush
                                  ? std::max<std::uint32_t>(
                                        1, static_cast<std::uint32_t>(req.pairs.size()))
                                  : 1;
      if (block.mshr_records + records > ctp_mshr_cap_) {
        stalled = true;
        return;
      }
      CtpMshr m;
      m.is_flush = req.is_flush;
      m.slice = req.slice;
      m.cmt_set = req.cmt_set;
      m.cmt_way = req.cmt_way;
      m.pairs = std::move(req.pairs);
      block.mshrs.push_back(std::move(m));
      block.mshr_records += records;
      mshr_records_live_ += records;
      emit(TraceStep::CtpMshrLogged, req.tvpn, req.is_flush ? 1 : 0);
      return;
    }
    // Resident hit.
    block.referenced = true;
    if (req.is_flush) {
      emit(TraceStep::CtpHit, req.tvpn);
      ctp_merge(block, set, *way, req.pairs);
      ctp_kick();
      return;
    }
    stats_.ctp_load_hits++;
    emit(TraceStep::CtpHit, req.tvpn);
    CtpResponse resp;
    resp.tvpn = req.tvpn;
    resp.slice = req.slice;
    resp.cmt_set = req.cmt_set;
    resp.cmt_way = req.cmt_way;
    auto begin = block.entries.begin() +
                 static_cast<std::size_t>(req.slice) * cmt_entries_per_block_;
    resp.slice_entries.assign(begin, begin + cmt_entries_per_block_);
    emit(TraceStep::CtpResponseSent, req.tvpn, req.slice);
    ctp_resp_.push_back(std::move(resp));
    cmt_kick();
    return;
  }

  emit(TraceStep::CtpMiss, req.tvpn);
  auto victim = ctp_.select_victim(set);
  if (!victim) {
    stalled = true;
    ctp_stalled_set_ = set;
    return;
  }
  CtpBlock& block = ctp_.at(set, *victim);
  SSDSIM_CHECK(!block.flushing && !block.in_fifo);
  block.state = CacheState::Transient;
  ctp_transient_++;
  block.tag = tag;
  block.referenced = false;
  block.entries.clear();
  block.mshrs.clear();
  block.mshr_records = 0;
  emit(TraceStep::CtpVictimAllocated, set, *victim);

  CtpMshr m;
  m.is_flush = req.is_flush;
  m.slice = req.slice;
  m.cmt_set = req.cmt_set;
  m.cmt_way = req.cmt_way;
  m.pairs = std::move(req.pairs);
  std::uint32_t records =
      m.is_flush ? std::max<std::uint32_t>(1, static_cast<std::uint32_t>(m.pairs.size()))
                 : 1;
  block.mshrs.push_back(std::move(m));
  block.mshr_records += records;
  mshr_records_live_ += records;
  emit(TraceStep::CtpMshrLogged, req.tvpn, req.is_flush ? 1 : 0);

  // Read-modify-write path: the translation page comes in from flash first.
  Tppn tppn = backend_.gtd_lookup(req.tvpn);
  emit(TraceStep::GtdLookup, req.tvpn, tppn);
  stats_.flash_reads++;
  ctp_reads_in_flight_++;
  emit(TraceStep::FlashReadIssued, tppn);
  backend_.read_page(req.tvpn, [this, tvpn = req.tvpn, set, victim = *victim,
                                tppn](std::shared_ptr<const std::vector<Dppn>> data) {
    emit(TraceStep::FlashReadCompleted, tppn);
    ctp_reads_in_flight_--;
    fc_resp_.push_back(FlashReadDone{tvpn, set, victim, std::move(data)});
    ctp_kick();
  });
}

void Fmmu::ctp_process_read_done(const FlashReadDone& done) {
  CtpBlock& block = ctp_.at(done.set, done.way);
  SSDSIM_CHECK(block.state == CacheState::Transient);
  block.entries = *done.payload;
  SSDSIM_CHECK(block.entries.size() == entries_per_tp_);
  block.state = CacheState::Clean;
  ctp_transient_--;
  block.referenced = true;
  emit(TraceStep::CtpFilled, done.tvpn);

  std::vector<CtpMshr> mshrs = std::move(block.mshrs);
  block.mshrs.clear();
  SSDSIM_CHECK(mshr_records_live_ >= block.mshr_records);
  mshr_records_live_ -= block.mshr_records;
  block.mshr_records = 0;
  for (const CtpMshr& m : mshrs) {
    CtpBlock& b = ctp_.at(done.set, done.way);
    if (m.is_flush) {
      ctp_merge(b, done.set, done.way, m.pairs);
    } else {
      CtpResponse resp;
      resp.tvpn = done.tvpn;
      resp.slice = m.slice;
      resp.cmt_set = m.cmt_set;
      resp.cmt_way = m.cmt_way;
      auto begin = b.entries.begin() +
                   static_cast<std::size_t>(m.slice) * cmt_entries_per_block_;
      resp.slice_entries.assign(begin, begin + cmt_entries_per_block_);
      emit(TraceStep::CtpResponseSent, done.tvpn, m.slice);
      ctp_resp_.push_back(std::move(resp));
    }
  }
  cmt_kick();
  unblock_all();
}

void Fmmu::ctp_process_program_done(const ProgramDone& done) {
  CtpBlock& block = ctp_.at(done.set, done.way);
  SSDSIM_CHECK(block.flushing && block.state == CacheState::Dirty);
  block.flushing = false;
  if (block.redirtied) {
    block.redirtied = false;
    if (!block.in_fifo) {
      block.in_fifo = true;
      ctp_flush_fifo_.push_back(done.tvpn);
    }
    return;
  }
  block.state = CacheState::Clean;
  ctp_dirty_--;
  unblock_all();
}

bool Fmmu::ctp_flush_one() {
  if (ctp_stalled_set_) {
    for (std::uint32_t w = 0; w < ctp_.ways(); ++w) {
      CtpBlock& block = ctp_.at(*ctp_stalled_set_, w);
      if (block.state != CacheState::Dirty || block.flushing) continue;
      Tvpn tvpn = block.tag * ctp_.sets() + *ctp_stalled_set_;
      block.in_fifo = false;  // its FIFO entry, if any, goes stale
      block.flushing = true;
      block.redirtied = false;
      stats_.flash_programs++;
      ctp_programs_in_flight_++;
      emit(TraceStep::CtpFlushProgram, tvpn);
      auto snapshot = std::make_shared<const std::vector<Dppn>>(block.entries);
      std::uint32_t set = *ctp_stalled_set_;
      backend_.write_page(tvpn, snapshot, [this, tvpn, set, w](Tppn) {
        ctp_programs_in_flight_--;
        bm_resp_.push_back(ProgramDone{tvpn, set, w});
        ctp_kick();
      });
      return true;
    }
  }
  while (!ctp_flush_fifo_.empty()) {
    Tvpn tvpn = ctp_flush_fifo_.front();
    std::uint32_t set = tvpn % ctp_.sets();
    std::uint32_t tag = tvpn / ctp_.sets();
    auto way = ctp_.find(set, tag);
    if (!way || ctp_.at(set, *way).state != CacheState::Dirty ||
        ctp_.at(set, *way).flushing) {
      // Stale FIFO entry (block already cleaned or mid-flight).
      ctp_flush_fifo_.pop_front();
      if (way) ctp_.at(set, *way).in_fifo = false;
      continue;
    }
    ctp_flush_fifo_.pop_front();
    CtpBlock& block = ctp_.at(set, *way);
    block.in_fifo = false;
    block.flushing = true;
    block.redirtied = false;
    stats_.flash_programs++;
    ctp_programs_in_flight_++;
    emit(TraceStep::CtpFlushProgram, tvpn);
    auto snapshot = std::make_shared<const std::vector<Dppn>>(block.entries);
    backend_.write_page(tvpn, snapshot, [this, tvpn, set, way = *way](Tppn) {
      ctp_programs_in_flight_--;
      bm_resp_.push_back(ProgramDone{tvpn, set, way});
      ctp_kick();
    });
    return true;
  }
  return false;
}

void Fmmu::ctp_flush_burst() {
  for (std::uint32_t i = 0; i < config_.flush_burst_blocks; ++i) {
    if (ctp_programs_in_flight_ >= config_.flush_burst_blocks) break;
    if (!ctp_flush_one()) break;
  }
}

// ---------------------------------------------------------------------------
// Drain, reconstruction, audits
// ---------------------------------------------------------------------------

void Fmmu::force_flush(std::function<void()> done) {
  SSDSIM_CHECK(!drain_done_);
  drain_done_ = std::move(done);
  cmt_kick();
  ctp_kick();
  check_drained();
}

void Fmmu::check_drained() {
  if (!drain_done_) return;
  bool idle = hrm_req_.empty() && gcm_req_.empty() && ctp_resp_.empty() &&
              cmt_req_.empty() && fc_resp_.empty() && bm_resp_.empty() &&
              !cmt_busy_ && !ctp_busy_ && cmt_transient_ == 0 &&
              ctp_transient_ == 0 && dtl_.empty() && cmt_dirty_ == 0 &&
              ctp_dirty_ == 0 && ctp_programs_in_flight_ == 0 &&
              ctp_reads_in_flight_ == 0;
  if (!idle) return;
  auto cb = std::move(drain_done_);
  drain_done_ = nullptr;
  cb();
}

std::vector<Dppn> Fmmu::reconstruct_map() const {
  SSDSIM_CHECK(cmt_dirty_ == 0 && ctp_dirty_ == 0);
  std::vector<Dppn> map(total_dlpns_, kUnmapped);
  for (Tvpn tvpn = 0; tvpn < backend_.page_count(); ++tvpn) {
    std::vector<Dppn> page = backend_.read_page_now(tvpn);
    for (std::uint32_t i = 0; i < entries_per_tp_; ++i) {
      std::uint64_t dlpn = static_cast<std::uint64_t>(tvpn) * entries_per_tp_ + i;
      if (dlpn < total_dlpns_) map[dlpn] = page[i];
    }
  }
  return map;
}

void Fmmu::audit_mshr_storage() const {
  std::uint64_t counted = 0;
  cmt_.for_each([&](std::uint32_t, std::uint32_t, const CmtBlock& b) {
    if (b.state == CacheState::Transient) {
      SSDSIM_CHECK(b.mshrs.size() <= cmt_mshr_cap_);
      counted += b.mshrs.size();
    } else {
      SSDSIM_CHECK(b.mshrs.empty());
    }
  });
  ctp_.for_each([&](std::uint32_t, std::uint32_t, const CtpBlock& b) {
    if (b.state == CacheState::Transient) {
      SSDSIM_CHECK(b.mshr_records <= ctp_mshr_cap_);
      counted += b.mshr_records;
    } else {
      SSDSIM_CHECK(b.mshrs.empty() && b.mshr_records == 0);
    }
  });
  SSDSIM_CHECK_MSG(counted == mshr_records_live_,
                   "MSHR records outside transient payloads: counted "
                       << counted << " live " << mshr_records_live_);
}

void Fmmu::audit_dtl_chains() const {
  std::size_t chained_total = 0;
  for (const DtlEntry& e : dtl_) {
    // Walk the chain.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> chain;
    std::uint32_t set = e.head_set, way = e.head_way;
    bool more = true;
    while (more) {
      const CmtBlock& b = cmt_.at(set, way);
      SSDSIM_CHECK(b.state == CacheState::Dirty && b.in_chain);
      std::uint32_t group = b.tag * cmt_.sets() + set;
      SSDSIM_CHECK(group * cmt_entries_per_block_ / entries_per_tp_ == e.tvpn);
      chain.emplace_back(set, way);
      more = b.has_next;
      std::uint32_t ns = b.next_set, nw = b.next_way;
      set = ns;
      way = nw;
    }
    SSDSIM_CHECK(chain.size() == e.dirty_count);
    // Brute-force scan: exactly the dirty blocks of this TVPN.
    std::size_t brute = 0;
    cmt_.for_each([&](std::uint32_t s, std::uint32_t w, const CmtBlock& b) {
      if (b.state != CacheState::Dirty) return;
      std::uint32_t group = b.tag * cmt_.sets() + s;
      if (group * cmt_entries_per_block_ / entries_per_tp_ == e.tvpn) {
        brute++;
        SSDSIM_CHECK(std::find(chain.begin(), chain.end(),
                               std::make_pair(s, w)) != chain.end());
      }
    });
    SSDSIM_CHECK(brute == chain.size());
    chained_total += chain.size();
  }
  // Every dirty block belongs to some chain.
  std::size_t dirty_total = 0;
  cmt_.for_each([&](std::uint32_t, std::uint32_t, const CmtBlock& b) {
    if (b.state == CacheState::Dirty) dirty_total++;
  });
  SSDSIM_CHECK(dirty_total == chained_total);
}

void Fmmu::dump(std::ostream& os) const {
  os << "FMMU: CMT " << cmt_.sets() << "x" << cmt_.ways() << " dirty=" << cmt_dirty_
     << " transient=" << cmt_transient_ << "; CTP " << ctp_.sets() << "x"
     << ctp_.ways() << " dirty=" << ctp_dirty_ << " transient=" << ctp_transient_
     << "\n";
  os << "DTL:";
  for (const DtlEntry& e : dtl_)
    os << " [tvpn=" << e.tvpn << " n=" << e.dirty_count << " upd=" << e.updated
       << "]";
  os << "\nGTD:";
  for (Tvpn t = 0; t < backend_.page_count(); ++t)
    os << " " << t << "->" << backend_.gtd_lookup(t);
  os << "\n";
  cmt_.for_each([&](std::uint32_t s, std::uint32_t w, const CmtBlock& b) {
    if (b.state == CacheState::Invalid) return;
    os << "  cmt[" << s << "," << w << "] tag=" << b.tag << " state="
       << static_cast<int>(b.state) << " ref=" << b.referenced
       << " chain=" << b.in_chain << " mshrs=" << b.mshrs.size() << "\n";
  });
  ctp_.for_each([&](std::uint32_t s, std::uint32_t w, const CtpBlock& b) {
    if (b.state == CacheState::Invalid) return;
    os << "  ctp[" << s << "," << w << "] tag=" << b.tag << " state="
       << static_cast<int>(b.state) << " ref=" << b.referenced
       << " flushing=" << b.flushing << " mshr_records=" << b.mshr_records << "\n";
  });
}

}  // namespace ssdsim::fmmu
