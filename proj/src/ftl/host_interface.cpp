#include "ftl/host_interface.hpp"

namespace ssdsim::ftl {

std::vector<SubRequest> chop(const HostCommand& cmd, const DataLayout& layout) {
  std::vector<SubRequest> subs;
  std::uint32_t spp = layout.sectors_per_logical_page;
  std::uint64_t first = cmd.lba;
  std::uint64_t last = cmd.lba + cmd.sectors - 1;
  for (std::uint64_t page = first / spp; page <= last / spp; ++page) {
    std::uint64_t page_first = page * spp;
    std::uint64_t lo = page_first < first ? first - page_first : 0;
    std::uint64_t hi = std::min<std::uint64_t>(spp - 1, last - page_first);
    std::uint16_t mask = 0;
    for (std::uint64_t s = lo; s <= hi; ++s) mask |= static_cast<std::uint16_t>(1u << s);
    subs.push_back(SubRequest{cmd.id, static_cast<Dlpn>(page), mask, cmd.is_write});
  }
  return subs;
}

bool DependencyChecker::admit(const SubRequest& sub) {
  PageState& st = pages_[sub.dlpn];
  bool conflicted = !st.waiters.empty() ||
                    (sub.is_write ? (st.active_writer || st.active_readers > 0)
                                  : st.active_writer);
  if (conflicted) {
    st.waiters.push_back(sub);
    pended_++;
    return false;
  }
  if (sub.is_write)
    st.active_writer = true;
  else
    st.active_readers++;
  return true;
}

void DependencyChecker::complete(const SubRequest& sub) {
  auto it = pages_.find(sub.dlpn);
  SSDSIM_CHECK(it != pages_.end());
  PageState& st = it->second;
  if (sub.is_write) {
    SSDSIM_CHECK(st.active_writer);
    st.active_writer = false;
  } else {
    SSDSIM_CHECK(st.active_readers > 0);
    st.active_readers--;
  }
  // Release in arrival order: one writer alone, or a run of readers.
  while (!st.waiters.empty()) {
    const SubRequest& head = st.waiters.front();
    if (head.is_write) {
      if (st.active_writer || st.active_readers > 0) break;
      st.active_writer = true;
    } else {
      if (st.active_writer) break;
      st.active_readers++;
    }
    SubRequest released = head;
    st.waiters.pop_front();
    on_release(released);
    if (released.is_write) break;
  }
  if (!st.active_writer && st.active_readers == 0 && st.waiters.empty())
    pages_.erase(it);
}

HostInterface::HostInterface(EventEngine& engine, BusyLedger& ledger, DataLayout layout,
                             HostLinkConfig config, FtlStats& stats)
    : engine_(engine), ledger_(ledger), layout_(layout), config_(config), stats_(stats) {
  link_comp_ = engine_.register_component("host_link");
  checker_.on_release = [this](const SubRequest& sub) {
    SSDSIM_CHECK(deliver != nullptr);
    deliver(sub);
  };
}

void HostInterface::submit(HostCommand cmd, CompletionHandler on_complete) {
  SSDSIM_CHECK(cmd.sectors >= 1 && cmd.sectors <= config_.max_sectors_per_command);
  if (outstanding_ >= config_.max_outstanding) {
    admission_queue_.emplace_back(std::move(cmd), std::move(on_complete));
    return;
  }
  admit(std::move(cmd), std::move(on_complete));
}

void HostInterface::admit(HostCommand cmd, CompletionHandler on_complete) {
  outstanding_++;
  std::uint64_t id = cmd.id;
  ActiveCommand& ac = active_[id];
  ac.cmd = std::move(cmd);
  ac.on_complete = std::move(on_complete);
  if (ac.cmd.is_write) {
    // Write data crosses the host link before the FTL sees the request.
    std::uint64_t bytes = static_cast<std::uint64_t>(ac.cmd.sectors) * layout_.sector_bytes;
    link_transfer(bytes, [this, id] {
      auto it = active_.find(id);
      SSDSIM_CHECK(it != active_.end());
      dispatch(it->second);
    });
  } else {
    dispatch(ac);
  }
}

void HostInterface::dispatch(ActiveCommand& ac) {
  auto subs = chop(ac.cmd, layout_);
  ac.pending_subs = static_cast<std::uint32_t>(subs.size());
  for (const auto& sub : subs) {
    if (checker_.admit(sub)) deliver(sub);
  }
}

void HostInterface::sub_request_complete(const SubRequest& sub) {
  checker_.complete(sub);
  auto it = active_.find(sub.cmd_id);
  SSDSIM_CHECK(it != active_.end());
  ActiveCommand& ac = it->second;
  SSDSIM_CHECK(ac.pending_subs > 0);
  if (--ac.pending_subs == 0) {
    if (ac.cmd.is_write) {
      finish(sub.cmd_id);
    } else {
      // All flash reads landed; one data-out transfer completes the read.
      std::uint64_t bytes =
          static_cast<std::uint64_t>(ac.cmd.sectors) * layout_.sector_bytes;
      link_transfer(bytes, [this, id = sub.cmd_id] { finish(id); });
    }
  }
}

void HostInterface::finish(std::uint64_t cmd_id) {
  auto it = active_.find(cmd_id);
  SSDSIM_CHECK(it != active_.end());
  ActiveCommand ac = std::move(it->second);
  active_.erase(it);
  outstanding_--;
  stats_.last_completion = engine_.now();

  if (stats_.in_window) {
    std::uint64_t bytes = static_cast<std::uint64_t>(ac.cmd.sectors) * layout_.sector_bytes;
    if (ac.cmd.is_write) {
      stats_.write_commands++;
      stats_.host_write_bytes += bytes;
    } else {
      stats_.read_commands++;
      stats_.host_read_bytes += bytes;
    }
    stats_.latencies_ns.push_back(engine_.now() - ac.cmd.arrival);
  }

  if (!admission_queue_.empty() && outstanding_ < config_.max_outstanding) {
    auto [cmd, cb] = std::move(admission_queue_.front());
    admission_queue_.pop_front();
    admit(std::move(cmd), std::move(cb));
  }
  if (ac.on_complete) ac.on_complete(ac.cmd);
}

void HostInterface::link_transfer(std::uint64_t bytes, std::function<void()> done) {
  link_queue_.push_back(LinkJob{bytes, std::move(done)});
  try_link();
}

void HostInterface::try_link() {
  if (link_busy_ || link_queue_.empty()) return;
  LinkJob job = std::move(link_queue_.front());
  link_queue_.pop_front();
  link_busy_ = true;
  SimTime start = engine_.now();
  SimTime duration = transfer_ns(job.bytes, config_.bandwidth_bytes_per_sec);
  engine_.schedule_in(duration, link_comp_, [this, start, job = std::move(job)] {
    ledger_.mark_busy(link_comp_, start, engine_.now());
    link_busy_ = false;
    if (job.done) job.done();
    try_link();
  });
}

}  // namespace ssdsim::ftl
