#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/types.hpp"

namespace ssdsim {

// One record per dispatched event; two runs with the same seed must produce
// identical logs (replay oracle for determinism tests).
struct DispatchRecord {
  SimTime fire_at;
  std::uint64_t seq;
  ComponentId target;

  bool operator==(const DispatchRecord&) const = default;
};

// Deterministic single-threaded discrete-event engine. Events are totally
// ordered by (fire_at, seq); seq is the insertion sequence number, so
// simultaneous events dispatch in scheduling order.
class EventEngine {
 public:
  ComponentId register_component(std::string name);
  const std::string& component_name(ComponentId id) const { return names_[id]; }
  std::size_t component_count() const { return names_.size(); }

  SimTime now() const { return now_; }

  void schedule_at(SimTime fire_at, ComponentId target, std::function<void()> action);
  void schedule_in(SimTime delay, ComponentId target, std::function<void()> action) {
    schedule_at(now_ + delay, target, std::move(action));
  }

  // Dispatches every event with fire_at <= t, then advances now() to t.
  // Returns the number of events dispatched.
  std::size_t run_until(SimTime t);

  // Drains the whole queue. `max_events` guards against runaway cascades.
  std::size_t run_to_completion(std::size_t max_events = SIZE_MAX);

  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  void enable_dispatch_log(bool on) { log_enabled_ = on; }
  const std::vector<DispatchRecord>& dispatch_log() const { return log_; }

 private:
  struct Event {
    SimTime fire_at;
    std::uint64_t seq;
    ComponentId target;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  void dispatch_one();

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<std::string> names_;
  bool log_enabled_ = false;
  std::vector<DispatchRecord> log_;
};

}  // namespace ssdsim
