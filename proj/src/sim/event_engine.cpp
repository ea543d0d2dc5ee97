#include "sim/event_engine.hpp"

#include <utility>

namespace ssdsim {

ComponentId EventEngine::register_component(std::string name) {
  names_.push_back(std::move(name));
  return static_cast<ComponentId>(names_.size() - 1);
}

void EventEngine::schedule_at(SimTime fire_at, ComponentId target,
                              std::function<void()> action) {
  SSDSIM_CHECK_MSG(fire_at >= now_, "scheduling in the past: fire_at=" << fire_at
                                        << " now=" << now_);
  queue_.push(Event{fire_at, next_seq_++, target, std::move(action)});
}

void EventEngine::dispatch_one() {
  // priority_queue::top is const; the action has to be moved out before pop.
  Event ev = std::move(const_cast<Event&>(queue_.top()));
  queue_.pop();
  SSDSIM_CHECK(ev.fire_at >= now_);
  now_ = ev.fire_at;
  if (log_enabled_) log_.push_back({ev.fire_at, ev.seq, ev.target});
  ev.action();
}

std::size_t EventEngine::run_until(SimTime t) {
  std::size_t dispatched = 0;
  while (!queue_.empty() && queue_.top().fire_at <= t) {
    dispatch_one();
    ++dispatched;
  }
  if (t > now_) now_ = t;
  return dispatched;
}

std::size_t EventEngine::run_to_completion(std::size_t max_events) {
  std::size_t dispatched = 0;
  while (!queue_.empty()) {
    SSDSIM_CHECK_MSG(dispatched < max_events, "event cascade exceeded limit");
    dispatch_one();
    ++dispatched;
  }
  return dispatched;
}

}  // namespace ssdsim
