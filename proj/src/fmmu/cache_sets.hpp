#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "common/error.hpp"

namespace ssdsim::fmmu {

enum class CacheState : std::uint8_t {
  Invalid,
  Clean,
  Dirty,
  Transient,  // holds logged MSHRs, not entries
};

// Set-associative block array with a per-set clock hand implementing the
// second-chance policy over non-dirty, non-transient blocks. Block must
// expose `state`, `referenced`, and `tag` members.
template <typename Block>
class SetArray {
 public:
  SetArray(std::uint32_t sets, std::uint32_t ways)
      : sets_(sets), ways_(ways), blocks_(static_cast<std::size_t>(sets) * ways),
        hand_(sets, 0) {
    SSDSIM_CHECK(sets >= 1 && ways >= 1);
  }

  std::uint32_t sets() const { return sets_; }
  std::uint32_t ways() const { return ways_; }
  std::uint32_t block_count() const { return sets_ * ways_; }

  Block& at(std::uint32_t set, std::uint32_t way) {
    return blocks_[static_cast<std::size_t>(set) * ways_ + way];
  }
  const Block& at(std::uint32_t set, std::uint32_t way) const {
    return blocks_[static_cast<std::size_t>(set) * ways_ + way];
  }

  std::optional<std::uint32_t> find(std::uint32_t set, std::uint32_t tag) const {
    for (std::uint32_t w = 0; w < ways_; ++w) {
      const Block& b = at(set, w);
      if (b.state != CacheState::Invalid && b.tag == tag) return w;
    }
    return std::nullopt;
  }

  // Invalid ways first; otherwise the clock hand sweeps clean blocks,
  // clearing referenced bits until one without a second chance turns up.
  // Returns nothing when every way is dirty or transient.
  std::optional<std::uint32_t> select_victim(std::uint32_t set) {
    for (std::uint32_t w = 0; w < ways_; ++w)
      if (at(set, w).state == CacheState::Invalid) return w;
    std::uint32_t& hand = hand_[set];
    for (std::uint32_t step = 0; step < 2 * ways_; ++step) {
      std::uint32_t w = hand;
      hand = (hand + 1) % ways_;
      Block& b = at(set, w);
      if (b.state != CacheState::Clean) continue;
      if (b.referenced) {
        b.referenced = false;
        continue;
      }
      return w;
    }
    return std::nullopt;
  }

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (std::uint32_t s = 0; s < sets_; ++s)
      for (std::uint32_t w = 0; w < ways_; ++w) fn(s, w, at(s, w));
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::uint32_t s = 0; s < sets_; ++s)
      for (std::uint32_t w = 0; w < ways_; ++w) fn(s, w, at(s, w));
  }

 private:
  std::uint32_t sets_;
  std::uint32_t ways_;
  std::vector<Block> blocks_;
  std::vector<std::uint32_t> hand_;
};

}  // namespace ssdsim::fmmu
