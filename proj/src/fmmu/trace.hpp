#pragma once

#include <cstdint>
#include <vector>

namespace ssdsim::fmmu {

// Structured trace of the address translation walk; the golden-sequence test
// asserts these records step by step.
enum class TraceStep : std::uint8_t {
  CmtHit,
  CmtMiss,              // a: dlpn
  CmtVictimAllocated,   // a: set, b: way
  CmtMshrLogged,        // a: dlpn, b: request kind
  CmtLoadIssued,        // a: tvpn, b: slice offset
  CtpHit,               // a: tvpn
  CtpMiss,              // a: tvpn
  CtpVictimAllocated,   // a: set, b: way
  CtpMshrLogged,        // a: tvpn, b: 0 load / 1 flush
  GtdLookup,            // a: tvpn, b: tppn
  FlashReadIssued,      // a: tppn
  FlashReadCompleted,   // a: tppn
  CtpFilled,            // a: tvpn
  CtpResponseSent,      // a: tvpn, b: slice offset
  CmtFilled,            // a: tvpn
  CmtUpdateApplied,     // a: dlpn, b: dppn
  DtlNewEntryRegistered,  // a: tvpn, b: set, c: way (absence check included)
  DtlChainPushFront,    // a: tvpn, b: set, c: way
  CmtResponseSent,      // a: dlpn, b: origin (0 HRM / 1 GCM)
  CmtFlushIssued,       // a: tvpn, b: blocks in chain
  CtpFlushProgram,      // a: tvpn
};

struct TraceRecord {
  TraceStep step;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t c = 0;

  bool operator==(const TraceRecord&) const = default;
};

using TraceLog = std::vector<TraceRecord>;

}  // namespace ssdsim::fmmu
