#pragma once

#include <vector>

#include "common/error.hpp"
#include "common/types.hpp"

namespace ssdsim {

// Accumulates busy intervals per component for utilization accounting.
// Intervals for one component must be reported in chronological order and
// must not overlap; an overlap means a resource was double-booked.
class BusyLedger {
 public:
  explicit BusyLedger(std::size_t component_count = 0) { resize(component_count); }

  void resize(std::size_t component_count) {
    busy_.resize(component_count, 0);
    last_end_.resize(component_count, 0);
  }

  // Clip accounting to intervals at or after t (measurement window start).
  void set_window_start(SimTime t) { window_start_ = t; }
  SimTime window_start() const { return window_start_; }

  void mark_busy(ComponentId component, SimTime from, SimTime to) {
    SSDSIM_CHECK_MSG(from <= to, "busy interval reversed");
    SSDSIM_CHECK_MSG(from >= last_end_[component],
                     "overlapping busy interval for component " << component);
    last_end_[component] = to;
    SimTime clipped_from = from < window_start_ ? window_start_ : from;
    if (to > clipped_from) busy_[component] += to - clipped_from;
  }

  SimTime busy_ns(ComponentId component) const { return busy_[component]; }

  double utilization(ComponentId component, SimTime until) const {
    if (until <= window_start_) return 0.0;
    SimTime elapsed = until - window_start_;
    SSDSIM_CHECK_MSG(busy_[component] <= elapsed, "busy time exceeds elapsed time");
    return static_cast<double>(busy_[component]) / static_cast<double>(elapsed);
  }

  void reset() {
    for (auto& v : busy_) v = 0;
    window_start_ = 0;
  }

 private:
  std::vector<SimTime> busy_;
  std::vector<SimTime> last_end_;
  SimTime window_start_ = 0;
};

}  // namespace ssdsim
