#pragma once

#include <cstdint>
#include <limits>

namespace ssdsim {

// Simulated time in integer nanoseconds. Table values in us/ms convert exactly.
using SimTime = std::uint64_t;

constexpr SimTime kNsPerUs = 1'000;
constexpr SimTime kNsPerMs = 1'000'000;
constexpr SimTime kNsPerSec = 1'000'000'000;

constexpr SimTime us(std::uint64_t v) { return v * kNsPerUs; }
constexpr SimTime ms(std::uint64_t v) { return v * kNsPerMs; }
constexpr SimTime seconds(std::uint64_t v) { return v * kNsPerSec; }

// Duration of transferring `bytes` at `bytes_per_second`, rounded to nearest ns.
constexpr SimTime transfer_ns(std::uint64_t bytes, std::uint64_t bytes_per_second) {
  return (bytes * kNsPerSec + bytes_per_second / 2) / bytes_per_second;
}

using ComponentId = std::uint32_t;

// Logical/physical page numbers for data and translation pages.
using Dlpn = std::uint32_t;
using Dppn = std::uint32_t;
using Tvpn = std::uint32_t;
using Tppn = std::uint32_t;

constexpr std::uint32_t kUnmapped = std::numeric_limits<std::uint32_t>::max();

}  // namespace ssdsim
