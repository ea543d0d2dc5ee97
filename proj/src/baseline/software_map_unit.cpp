#include "baseline/software_map_unit.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace ssdsim::baseline {

using fmmu::CacheState;
using ftl::MapOp;
using ftl::MapRequest;
using ftl::MapResponse;
using ftl::MapStatus;

SoftwareMapUnit::SoftwareMapUnit(EventEngine& engine, BusyLedger* ledger,
                                 ftl::TranslationBackend& backend,
                                 SoftwareMapConfig config, std::size_t total_dlpns)
    : engine_(engine),
      ledger_(ledger),
      backend_(backend),
      config_(config),
      total_dlpns_(static_cast<std::uint32_t>(total_dlpns)),
      entries_per_tp_(backend.entries_per_page()),
      entries_per_block_(config.cmt_block_bytes / config.entry_bytes) {
  SSDSIM_CHECK(config_.cores >= 1);
  cores_.resize(config_.cores);
  for (std::uint32_t i = 0; i < config_.cores; ++i) {
    Core& c = cores_[i];
    c.comp = engine_.register_component(
        (config_.scheme == Scheme::Dftl ? "dftl_core." : "cdftl_core.") +
        std::to_string(i));
    std::uint32_t cmt_bytes = (config_.scheme == Scheme::Dftl
                                   ? config_.map_ram_bytes
                                   : config_.cmt_bytes) /
                              config_.cores;
    std::uint32_t cmt_blocks =
        std::max(config_.ways, cmt_bytes / config_.cmt_block_bytes);
    c.cmt = fmmu::SetArray<SwBlock>(std::max(1u, cmt_blocks / config_.ways),
                                    config_.ways);
    if (config_.scheme == Scheme::Cdftl) {
      std::uint32_t page_bytes = entries_per_tp_ * config_.entry_bytes;
      std::uint32_t ctp_blocks = std::max(
          config_.ways, (config_.ctp_bytes / config_.cores) / page_bytes);
      c.ctp.emplace(std::max(1u, ctp_blocks / config_.ways), config_.ways);
    }
  }
}

std::uint32_t SoftwareMapUnit::route_by_core(Dlpn dlpn) const {
  return static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(dlpn) * config_.cores) / total_dlpns_);
}

SimTime SoftwareMapUnit::cost_hit() const {
  const auto& m = config_.cost;
  return m.scaled(config_.scheme == Scheme::Dftl ? m.dftl_hit : m.cdftl_cmt_hit,
                  config_.cores);
}
SimTime SoftwareMapUnit::cost_ctp_hit() const {
  return config_.cost.scaled(config_.cost.cdftl_ctp_hit, config_.cores);
}
SimTime SoftwareMapUnit::cost_miss() const {
  const auto& m = config_.cost;
  return m.scaled(config_.scheme == Scheme::Dftl ? m.dftl_miss : m.cdftl_miss,
                  config_.cores);
}

void SoftwareMapUnit::submit(MapRequest req) {
  std::uint32_t core = route_by_core(req.dlpn);
  cores_[core].queue.push_back(req);
  kick(core);
}

void SoftwareMapUnit::busy_mark(Core& c, SimTime from) {
  if (ledger_) ledger_->mark_busy(c.comp, from, engine_.now());
}

bool SoftwareMapUnit::needs_cmt_flush(Core& c) const {
  return c.dirty_cmt > static_cast<std::uint32_t>(config_.dirty_flush_threshold *
                                                  c.cmt.block_count());
}

void SoftwareMapUnit::kick(std::uint32_t core) {
  Core& c = cores_[core];
  if (c.busy || c.queue.empty()) {
    check_drained();
    return;
  }
  MapRequest req = c.queue.front();
  c.queue.pop_front();
  c.busy = true;
  c.service_log.push_back(engine_.now());
  serve(core, req);
}

void SoftwareMapUnit::finish_request(std::uint32_t core, const MapRequest& req,
                                     SwBlock& block, std::uint32_t idx) {
  MapResponse resp;
  resp.tag = req.tag;
  resp.dlpn = req.dlpn;
  resp.kind = req.kind;
  block.referenced = true;

  Core& c = cores_[core];
  switch (req.kind) {
    case MapOp::Lookup:
      resp.dppn = block.entries[idx];
      resp.status =
          resp.dppn == kUnmapped ? MapStatus::Unmapped : MapStatus::Ok;
      break;
    case MapOp::Update:
      resp.prev_dppn = block.entries[idx];
      block.entries[idx] = req.new_dppn;
      resp.dppn = req.new_dppn;
      resp.status = MapStatus::Ok;
      observe_apply(req, true);
      if (block.state != CacheState::Dirty) {
        block.state = CacheState::Dirty;
        c.dirty_cmt++;
      }
      break;
    case MapOp::CondUpdate:
      if (block.entries[idx] == req.old_dppn) {
        block.entries[idx] = req.new_dppn;
        resp.dppn = req.new_dppn;
        resp.prev_dppn = req.old_dppn;
        resp.status = MapStatus::Ok;
        observe_apply(req, true);
        if (block.state != CacheState::Dirty) {
          block.state = CacheState::Dirty;
          c.dirty_cmt++;
        }
      } else {
        resp.dppn = block.entries[idx];
        resp.status = MapStatus::Stale;
        observe_apply(req, false);
      }
      break;
  }
  respond(resp, req.origin);
}

void SoftwareMapUnit::serve(std::uint32_t core, MapRequest req) {
  Core& c = cores_[core];
  std::uint32_t group = req.dlpn / entries_per_block_;
  std::uint32_t set = group % c.cmt.sets();
  std::uint32_t tag = group / c.cmt.sets();
  std::uint32_t idx = req.dlpn % entries_per_block_;
  SimTime start = engine_.now();

  auto way = c.cmt.find(set, tag);
  if (way) {
    stats_.cmt_hits++;
    engine_.schedule_in(cost_hit(), c.comp, [this, core, req, set, w = *way, idx,
                                             start] {
      Core& cc = cores_[core];
      busy_mark(cc, start);
      finish_request(core, req, cc.cmt.at(set, w), idx);
      cc.busy = false;
      kick(core);
    });
    return;
  }

  // Miss. The flush-on-pressure and the no-victim cases both force a blocking
  // flush pass first; afterwards re-enter this request from the top.
  if (needs_cmt_flush(c) || !c.cmt.select_victim(set).has_value()) {
    flush_cmt(core, [this, core, req] { serve(core, req); });
    return;
  }

  stats_.misses++;
  bool two_level = config_.scheme == Scheme::Cdftl;
  Tvpn tvpn = req.dlpn / entries_per_tp_;

  auto fill_cmt_and_finish = [this, core, req, set, idx,
                              start](const std::vector<Dppn>& page_entries) {
    Core& cc = cores_[core];
    auto victim = cc.cmt.select_victim(set);
    SSDSIM_CHECK(victim.has_value());  // flush above guaranteed a clean way
    SwBlock& block = cc.cmt.at(set, *victim);
    std::uint32_t group2 = req.dlpn / entries_per_block_;
    block.state = CacheState::Clean;
    block.tag = group2 / cc.cmt.sets();
    block.referenced = false;
    std::uint32_t base = (group2 * entries_per_block_) % entries_per_tp_;
    block.entries.assign(page_entries.begin() + base,
                         page_entries.begin() + base + entries_per_block_);
    busy_mark(cc, start);
    finish_request(core, req, block, idx);
    cc.busy = false;
    kick(core);
  };

  if (two_level) {
    auto& ctp = *c.ctp;
    std::uint32_t cset = tvpn % ctp.sets();
    std::uint32_t ctag = tvpn / ctp.sets();
    auto cway = ctp.find(cset, ctag);
    if (cway) {
      stats_.ctp_hits++;
      engine_.schedule_in(cost_ctp_hit(), c.comp,
                          [fill = std::move(fill_cmt_and_finish), this, core, cset,
                           w = *cway] {
                            Core& cc = cores_[core];
                            cc.ctp->at(cset, w).referenced = true;
                            fill(cc.ctp->at(cset, w).entries);
                          });
      return;
    }
    // Miss in both levels: blocking flash read fills CTP then CMT.
    engine_.schedule_in(cost_miss(), c.comp, [this, core, tvpn, cset, ctag,
                                              fill = std::move(fill_cmt_and_finish)] {
      Core& cc = cores_[core];
      auto victim = cc.ctp->select_victim(cset);
      if (!victim) {
        // Every CTP way dirty: flush one of them first, then retry the read.
        flush_ctp_block(core, cset, 0, [this, core, tvpn, cset, ctag, fill] {
          // Recurse through a fresh service of the same phase.
          Core& c2 = cores_[core];
          auto v2 = c2.ctp->select_victim(cset);
          SSDSIM_CHECK(v2.has_value());
          outstanding_flash_++;
          backend_.read_page(tvpn, [this, core, tvpn, cset, ctag, v2, fill](
                                       auto data) {
            outstanding_flash_--;
            Core& c3 = cores_[core];
            SwBlock& b = c3.ctp->at(cset, *v2);
            b.state = CacheState::Clean;
            b.tag = ctag;
            b.referenced = false;
            b.entries = *data;
            fill(b.entries);
          });
        });
        return;
      }
      outstanding_flash_++;
      backend_.read_page(tvpn, [this, core, cset, ctag, victim, fill](auto data) {
        outstanding_flash_--;
        Core& c3 = cores_[core];
        SwBlock& b = c3.ctp->at(cset, *victim);
        b.state = CacheState::Clean;
        b.tag = ctag;
        b.referenced = false;
        b.entries = *data;
        fill(b.entries);
      });
    });
    return;
  }

  // DFTL: read the translation page, keep only this block's slice.
  engine_.schedule_in(cost_miss(), c.comp, [this, core, tvpn,
                                            fill = std::move(fill_cmt_and_finish)] {
    outstanding_flash_++;
    backend_.read_page(tvpn, [this, fill](auto data) {
      outstanding_flash_--;
      fill(*data);
    });
  });
}

// Scans the whole CMT for dirty blocks of the victim TVPN (there is no next
// link to follow), batches them into one read-modify-write, and blocks the
// core for the scan plus the flash round trip.
void SoftwareMapUnit::flush_cmt(std::uint32_t core, std::function<void()> next) {
  Core& c = cores_[core];
  // Victim TVPN: the first dirty block in scan order.
  std::optional<Tvpn> victim_tvpn;
  c.cmt.for_each([&](std::uint32_t s, std::uint32_t, const SwBlock& b) {
    if (victim_tvpn || b.state != CacheState::Dirty) return;
    std::uint32_t group = b.tag * c.cmt.sets() + s;
    victim_tvpn = group * entries_per_block_ / entries_per_tp_;
  });
  if (!victim_tvpn) {
    next();
    return;
  }
  stats_.flushes++;
  stats_.flush_blocks_scanned += c.cmt.block_count();
  SimTime scan_time =
      config_.cost.flush_scan_per_block * c.cmt.block_count();
  SimTime start = engine_.now();

  engine_.schedule_in(scan_time, c.comp, [this, core, tvpn = *victim_tvpn, start,
                                          next = std::move(next)] {
    Core& cc = cores_[core];
    busy_mark(cc, start);
    // Gather every dirty block of this TVPN.
    std::vector<std::pair<std::uint32_t, Dppn>> pairs;
    cc.cmt.for_each([&](std::uint32_t s, std::uint32_t w, SwBlock& b) {
      if (b.state != CacheState::Dirty) return;
      std::uint32_t group = b.tag * cc.cmt.sets() + s;
      if (group * entries_per_block_ / entries_per_tp_ != tvpn) return;
      std::uint32_t base = (group * entries_per_block_) % entries_per_tp_;
      for (std::uint32_t e = 0; e < entries_per_block_; ++e)
        pairs.emplace_back(base + e, b.entries[e]);
      b.state = CacheState::Clean;
      cc.dirty_cmt--;
      (void)w;
    });
    merge_into_ctp(core, tvpn, std::move(pairs), std::move(next));
  });
}

// DFTL writes the merged page straight back; CDFTL merges into its CTP and
// defers the program until that level's own flush.
void SoftwareMapUnit::merge_into_ctp(std::uint32_t core, Tvpn tvpn,
                                     std::vector<std::pair<std::uint32_t, Dppn>> pairs,
                                     std::function<void()> next) {
  Core& c = cores_[core];
  if (config_.scheme == Scheme::Dftl) {
    outstanding_flash_++;
    backend_.read_page(tvpn, [this, tvpn, pairs = std::move(pairs),
                              next = std::move(next)](auto data) {
      auto merged = std::make_shared<std::vector<Dppn>>(*data);
      for (const auto& [off, dppn] : pairs) (*merged)[off] = dppn;
      backend_.write_page(tvpn, std::move(merged), [this, next](Tppn) {
        outstanding_flash_--;
        next();
      });
    });
    return;
  }
  auto& ctp = *c.ctp;
  std::uint32_t cset = tvpn % ctp.sets();
  std::uint32_t ctag = tvpn / ctp.sets();
  auto cway = ctp.find(cset, ctag);
  if (cway) {
    SwBlock& b = ctp.at(cset, *cway);
    for (const auto& [off, dppn] : pairs) b.entries[off] = dppn;
    if (b.state != CacheState::Dirty) {
      b.state = CacheState::Dirty;
      c.dirty_ctp++;
    }
    // CTP flush pressure resolves before the core moves on.
    if (c.dirty_ctp > static_cast<std::uint32_t>(config_.dirty_flush_threshold *
                                                 ctp.block_count())) {
      flush_ctp_block(core, cset, *cway, std::move(next));
      return;
    }
    next();
    return;
  }
  // Translation page not resident: read-modify-write through the CTP.
  auto victim = ctp.select_victim(cset);
  if (!victim) {
    flush_ctp_block(core, cset, 0, [this, core, tvpn, pairs = std::move(pairs),
                                    next = std::move(next)]() mutable {
      merge_into_ctp(core, tvpn, std::move(pairs), std::move(next));
    });
    return;
  }
  outstanding_flash_++;
  backend_.read_page(tvpn, [this, core, tvpn, cset, ctag, victim,
                            pairs = std::move(pairs),
                            next = std::move(next)](auto data) {
    outstanding_flash_--;
    Core& cc = cores_[core];
    SwBlock& b = cc.ctp->at(cset, *victim);
    b.state = CacheState::Dirty;
    cc.dirty_ctp++;
    b.tag = ctag;
    b.referenced = false;
    b.entries = *data;
    for (const auto& [off, dppn] : pairs) b.entries[off] = dppn;
    next();
  });
}

void SoftwareMapUnit::flush_ctp_block(std::uint32_t core, std::uint32_t set,
                                      std::uint32_t way, std::function<void()> next) {
  Core& c = cores_[core];
  auto& ctp = *c.ctp;
  // Flush the requested block if dirty, else the first dirty way of the set,
  // else any dirty block.
  std::uint32_t fs = set, fw = way;
  if (ctp.at(fs, fw).state != CacheState::Dirty) {
    bool found = false;
    for (std::uint32_t w = 0; w < ctp.ways() && !found; ++w)
      if (ctp.at(set, w).state == CacheState::Dirty) {
        fw = w;
        found = true;
      }
    if (!found) {
      ctp.for_each([&](std::uint32_t s, std::uint32_t w, const SwBlock& b) {
        if (!found && b.state == CacheState::Dirty) {
          fs = s;
          fw = w;
          found = true;
        }
      });
    }
    if (!found) {
      next();
      return;
    }
  }
  SwBlock& b = ctp.at(fs, fw);
  Tvpn tvpn = b.tag * ctp.sets() + fs;
  auto snapshot = std::make_shared<const std::vector<Dppn>>(b.entries);
  b.state = CacheState::Clean;
  c.dirty_ctp--;
  outstanding_flash_++;
  backend_.write_page(tvpn, snapshot, [this, next = std::move(next)](Tppn) {
    outstanding_flash_--;
    next();
  });
}

void SoftwareMapUnit::force_flush(std::function<void()> done) {
  SSDSIM_CHECK(!drain_done_);
  drain_done_ = std::move(done);
  drain_core_cursor_ = 0;
  check_drained();
}

void SoftwareMapUnit::check_drained() {
  if (!drain_done_) return;
  for (const Core& c : cores_)
    if (c.busy || !c.queue.empty()) return;
  if (outstanding_flash_ > 0) return;

  // Flush the next core that still holds dirt; the chain re-enters here.
  for (std::uint32_t i = 0; i < cores_.size(); ++i) {
    Core& c = cores_[i];
    if (c.dirty_cmt > 0) {
      c.busy = true;
      flush_cmt(i, [this, i] {
        cores_[i].busy = false;
        kick(i);
        check_drained();
      });
      return;
    }
    if (c.ctp && c.dirty_ctp > 0) {
      c.busy = true;
      flush_ctp_block(i, 0, 0, [this, i] {
        cores_[i].busy = false;
        kick(i);
        check_drained();
      });
      return;
    }
  }
  auto cb = std::move(drain_done_);
  drain_done_ = nullptr;
  cb();
}

std::vector<Dppn> SoftwareMapUnit::reconstruct_map() const {
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

void SoftwareMapUnit::dump(std::ostream& os) const {
  os << (config_.scheme == Scheme::Dftl ? "DFTL" : "CDFTL") << " cores="
     << config_.cores << "\n";
  for (std::uint32_t i = 0; i < cores_.size(); ++i) {
    const Core& c = cores_[i];
    os << "  core " << i << ": cmt " << c.cmt.sets() << "x" << c.cmt.ways()
       << " dirty=" << c.dirty_cmt;
    if (c.ctp)
      os << "; ctp " << c.ctp->sets() << "x" << c.ctp->ways()
         << " dirty=" << c.dirty_ctp;
    os << " queue=" << c.queue.size() << "\n";
  }
}

}  // namespace ssdsim::baseline
