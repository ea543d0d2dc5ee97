#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ftl/map_unit.hpp"
#include "ftl/translation_store.hpp"
#include "fmmu/cache_sets.hpp"
#include "fmmu/trace.hpp"
#include "sim/busy_ledger.hpp"
#include "sim/event_engine.hpp"

namespace ssdsim::fmmu {

struct FmmuConfig {
  std::uint32_t cmt_bytes = 64 * 1024;
  std::uint32_t ctp_bytes = 1024 * 1024;
  std::uint32_t cmt_block_bytes = 64;
  std::uint32_t entry_bytes = 4;
  std::uint32_t ways = 4;
  std::uint32_t mshr_bytes = 16;
  SimTime service_ns = 160;  // per packet, each machine

  // Flush control: enter flushing mode at the low watermark (fraction of
  // blocks non-dirty), alternate flush bursts with request service until the
  // high watermark.
  double watermark_low = 0.25;
  double watermark_high = 0.50;
  std::uint32_t flush_burst_blocks = 4;
  // Background flush begins when dirty blocks exceed these (fractions).
  double cmt_dirty_threshold = 0.50;
  std::uint32_t ctp_dirty_threshold = 8;  // blocks

  // Cost-benefit flush victim scoring.
  double weight_greedy = 4.0;
  double weight_oldest = 2.0;
  double weight_lru = 1.0;

  // Arbitration: responses outrank requests; the GCM share follows the
  // current victim's valid-page fraction (costlier reclaims get more slots).
  std::uint32_t response_weight = 2;
  std::uint32_t request_weight = 1;
  std::uint32_t gcm_weight_max = 8;
};

struct SplitAddress {
  Tvpn tvpn;
  std::uint32_t slice;  // CMT-block-sized offset within the translation page
  std::uint32_t set;
  std::uint32_t tag;
};

// Pure address arithmetic: where a DLPN's mapping entry lives.
SplitAddress split_dlpn(Dlpn dlpn, std::uint32_t entries_per_translation_page,
                        std::uint32_t entries_per_cmt_block, std::uint32_t cmt_sets);

// Hardware-automated two-level map cache: non-blocking CMT/CTP machines with
// in-cache MSHRs, a Dirty Translation List for batch flushing, second-chance
// replacement, watermark flush control, and weighted round-robin arbitration.
class Fmmu : public ftl::MapUnit {
 public:
  Fmmu(EventEngine& engine, BusyLedger* ledger, ftl::TranslationBackend& backend,
       FmmuConfig config, std::size_t total_dlpns);

  void submit(ftl::MapRequest req) override;
  void force_flush(std::function<void()> done) override;
  std::vector<Dppn> reconstruct_map() const override;
  Tppn gtd_lookup(Tvpn tvpn) const override { return backend_.gtd_lookup(tvpn); }
  bool gtd_relocate(Tvpn tvpn, Tppn new_tppn, Tppn old_tppn) override {
    return backend_.relocate(tvpn, new_tppn, old_tppn);
  }
  void dump(std::ostream& os) const override;

  void set_trace(TraceLog* log) { trace_ = log; }
  // Valid-fraction provider for the GCM arbitration weight.
  void set_gc_victim_fraction(std::function<double()> fn) {
    gc_victim_fraction_ = std::move(fn);
  }

  ComponentId cmt_component() const { return cmt_comp_; }
  ComponentId ctp_component() const { return ctp_comp_; }

  // Accounting and audits.
  std::uint64_t ctp_loads_issued() const { return stats_.ctp_loads; }
  std::uint64_t flash_reads_issued() const { return stats_.flash_reads; }
  std::uint64_t flash_programs_issued() const { return stats_.flash_programs; }
  std::uint64_t mshr_records_live() const { return mshr_records_live_; }
  std::uint64_t stalled_requests() const { return stats_.stalls; }
  // Every MSHR record lives inside a transient block's payload, within its
  // capacity; throws on violation.
  void audit_mshr_storage() const;
  // Chain contents of each DTL entry equal a brute-force scan for dirty
  // blocks of that TVPN.
  void audit_dtl_chains() const;

  struct Stats {
    std::uint64_t cmt_hits = 0;
    std::uint64_t cmt_misses = 0;
    std::uint64_t ctp_loads = 0;
    std::uint64_t ctp_load_hits = 0;
    std::uint64_t flash_reads = 0;
    std::uint64_t flash_programs = 0;
    std::uint64_t cmt_flushes = 0;
    std::uint64_t stalls = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  // ---- layout ----
  struct Mshr {
    ftl::MapRequest request;
  };
  struct CmtBlock {
    CacheState state = CacheState::Invalid;
    bool referenced = false;
    std::uint32_t tag = 0;
    std::vector<Dppn> entries;
    std::vector<Mshr> mshrs;
    // DTL chain link: the next dirty block of the same TVPN.
    bool in_chain = false;
    bool has_next = false;
    std::uint32_t next_set = 0;
    std::uint32_t next_way = 0;
  };
  struct CtpMshr {
    bool is_flush = false;
    // load: where the CMT expects the slice
    std::uint32_t slice = 0;
    std::uint32_t cmt_set = 0;
    std::uint32_t cmt_way = 0;
    // flush: merged (offset, dppn) pairs
    std::vector<std::pair<std::uint32_t, Dppn>> pairs;
  };
  struct CtpBlock {
    CacheState state = CacheState::Invalid;
    bool referenced = false;
    std::uint32_t tag = 0;
    std::vector<Dppn> entries;
    std::vector<CtpMshr> mshrs;
    std::uint32_t mshr_records = 0;
    bool flushing = false;   // program in flight
    bool redirtied = false;  // dirtied again behind the in-flight program
    bool in_fifo = false;
  };
  struct DtlEntry {
    Tvpn tvpn;
    std::uint32_t head_set = 0;
    std::uint32_t head_way = 0;
    std::uint32_t dirty_count = 0;
    bool updated = false;
  };

  // ---- packets ----
  struct CtpRequest {
    bool is_flush = false;
    Tvpn tvpn = 0;
    std::uint32_t slice = 0;
    std::uint32_t cmt_set = 0;
    std::uint32_t cmt_way = 0;
    std::vector<std::pair<std::uint32_t, Dppn>> pairs;
  };
  struct CtpResponse {
    Tvpn tvpn;
    std::uint32_t slice;
    std::uint32_t cmt_set;
    std::uint32_t cmt_way;
    std::vector<Dppn> slice_entries;
  };
  struct FlashReadDone {
    Tvpn tvpn;
    std::uint32_t set;
    std::uint32_t way;
    std::shared_ptr<const std::vector<Dppn>> payload;
  };
  struct ProgramDone {
    Tvpn tvpn;
    std::uint32_t set;
    std::uint32_t way;
  };

  // ---- CMT machine ----
  void cmt_kick();
  bool cmt_try_service();
  void cmt_process_request(const ftl::MapRequest& req, bool& stalled);
  void cmt_process_ctp_response(const CtpResponse& resp);
  bool cmt_apply_to_block(CmtBlock& block, std::uint32_t set, std::uint32_t way,
                          const ftl::MapRequest& req);
  void cmt_flush_burst();
  bool cmt_flush_one();  // returns false when nothing left to flush
  Tvpn cmt_select_flush_victim();
  // A request stalled on an all-dirty set waits for a flush; pick a TVPN
  // with a dirty block in that set so the stall actually clears.
  std::optional<Tvpn> dtl_victim_in_set(std::uint32_t set) const;
  void dtl_register(Tvpn tvpn, std::uint32_t set, std::uint32_t way);
  void dtl_touch(Tvpn tvpn);
  std::uint32_t cmt_non_dirty() const {
    return cmt_.block_count() - cmt_dirty_ - cmt_transient_;
  }

  // ---- CTP machine ----
  void ctp_kick();
  bool ctp_try_service();
  void ctp_process_request(CtpRequest& req, bool& stalled);
  void ctp_process_read_done(const FlashReadDone& done);
  void ctp_process_program_done(const ProgramDone& done);
  void ctp_merge(CtpBlock& block, std::uint32_t set, std::uint32_t way,
                 const std::vector<std::pair<std::uint32_t, Dppn>>& pairs);
  void ctp_flush_burst();
  bool ctp_flush_one();
  std::uint32_t ctp_non_dirty() const {
    return ctp_.block_count() - ctp_dirty_ - ctp_transient_;
  }

  void respond_map(const ftl::MapResponse& resp, ftl::MapOrigin origin);
  void unblock_all();
  void emit(TraceStep step, std::uint64_t a = 0, std::uint64_t b = 0,
            std::uint64_t c = 0) {
    if (trace_) trace_->push_back(TraceRecord{step, a, b, c});
  }
  std::uint32_t gcm_weight() const;
  void check_drained();
  SplitAddress split(Dlpn dlpn) const {
    return split_dlpn(dlpn, entries_per_tp_, cmt_entries_per_block_, cmt_.sets());
  }

  EventEngine& engine_;
  BusyLedger* ledger_;
  ftl::TranslationBackend& backend_;
  FmmuConfig config_;
  ComponentId cmt_comp_;
  ComponentId ctp_comp_;
  TraceLog* trace_ = nullptr;
  std::function<double()> gc_victim_fraction_;

  std::uint32_t entries_per_tp_;
  std::uint32_t cmt_entries_per_block_;
  std::uint32_t cmt_mshr_cap_;
  std::uint32_t ctp_mshr_cap_;
  std::uint32_t total_dlpns_;

  SetArray<CmtBlock> cmt_;
  SetArray<CtpBlock> ctp_;
  std::uint32_t cmt_dirty_ = 0;
  std::uint32_t cmt_transient_ = 0;
  std::uint32_t ctp_dirty_ = 0;
  std::uint32_t ctp_transient_ = 0;

  // DTL: FIFO registered at the tail; an entry per TVPN with dirty CMT blocks.
  std::list<DtlEntry> dtl_;
  std::unordered_map<Tvpn, std::list<DtlEntry>::iterator> dtl_index_;

  // CMT queues: hrm req, gcm req, ctp responses.
  std::deque<ftl::MapRequest> hrm_req_;
  std::deque<ftl::MapRequest> gcm_req_;
  std::deque<CtpResponse> ctp_resp_;
  bool hrm_blocked_ = false;
  bool gcm_blocked_ = false;
  std::optional<std::uint32_t> cmt_stalled_set_;
  std::uint32_t cmt_arb_queue_ = 0;
  std::uint32_t cmt_arb_credit_ = 0;
  bool cmt_busy_ = false;
  bool cmt_flush_turn_ = true;  // alternation flag while in flushing mode
  bool cmt_flushing_mode_ = false;

  // CTP queues: cmt requests, flash read completions, program completions.
  std::deque<CtpRequest> cmt_req_;
  std::deque<FlashReadDone> fc_resp_;
  std::deque<ProgramDone> bm_resp_;
  bool cmt_req_blocked_ = false;
  std::optional<std::uint32_t> ctp_stalled_set_;
  std::uint32_t ctp_arb_queue_ = 0;
  std::uint32_t ctp_arb_credit_ = 0;
  bool ctp_busy_ = false;
  bool ctp_flush_turn_ = true;
  bool ctp_flushing_mode_ = false;
  std::deque<Tvpn> ctp_flush_fifo_;
  std::uint32_t ctp_programs_in_flight_ = 0;
  std::uint32_t ctp_reads_in_flight_ = 0;

  std::uint64_t mshr_records_live_ = 0;
  Stats stats_;
  std::function<void()> drain_done_;
};

}  // namespace ssdsim::fmmu
