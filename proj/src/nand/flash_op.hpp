#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nand/geometry.hpp"
#include "nand/timing.hpp"

namespace ssdsim::nand {

enum class OobKind : std::uint8_t { None, Data, Translation };

// Opaque page contents. Only translation pages carry a payload; host data is
// irrelevant to timing and mapping correctness and is not stored.
using PagePayload = std::shared_ptr<const std::vector<std::uint32_t>>;

// What a program stamps into one page: the OOB logical-address tags (one DLPN
// per data slot, or the TVPN for a translation page) plus optional payload.
struct PageWrite {
  OobKind kind = OobKind::Data;
  std::vector<std::uint32_t> tags;
  PagePayload payload;
};

struct PageSnapshot {
  PageAddress addr;
  OobKind kind = OobKind::None;
  std::vector<std::uint32_t> tags;
  PagePayload payload;
};

struct FlashResult {
  FlashOpKind kind;
  std::vector<PageSnapshot> pages;  // reads only; captured at cell end
};

struct FlashOperation {
  FlashOpKind kind = FlashOpKind::ReadPage;
  // Erase: targets[0] names the block (page field ignored). Multi-plane and
  // one-shot groups list every page they touch.
  std::vector<PageAddress> targets;
  std::uint64_t transfer_bytes = 0;  // over the channel bus; 0 for erase
  std::vector<PageWrite> writes;     // program kinds: parallel to targets
  std::function<void(FlashResult&&)> on_complete;

  bool is_program() const {
    return kind == FlashOpKind::ProgramPage || kind == FlashOpKind::MultiPlaneProgram ||
           kind == FlashOpKind::OneShotProgram;
  }
  bool is_read() const {
    return kind == FlashOpKind::ReadPage || kind == FlashOpKind::MultiPlaneRead;
  }
};

// Per-block program/erase state. Pages below next_program_page are programmed.
struct BlockState {
  std::uint32_t next_program_page = 0;
  std::uint32_t erase_count = 0;
  bool erase_pending = false;     // erase submitted but not yet completed
  std::uint32_t pending_programs = 0;
  // One row of tags per page (slot DLPNs or the TVPN), kUnmapped-padded.
  std::vector<std::uint32_t> oob;
  std::vector<OobKind> oob_kind;
  std::vector<PagePayload> payloads;
};

enum class Violation : std::uint8_t {
  Ok,
  SequentialProgram,   // program to a page other than next_program_page
  EraseBeforeProgram,  // re-program of a programmed page without erase
  EnduranceExceeded,   // warning-level
  ReadUnwritten,
  BadTargets,          // malformed multi-plane / one-shot grouping
};

const char* to_string(Violation v);

// Pure single-page checks used both by tests and by NandFlash::submit.
inline Violation check_page_program(const BlockState& state, std::uint32_t page) {
  if (page < state.next_program_page) return Violation::EraseBeforeProgram;
  if (page > state.next_program_page) return Violation::SequentialProgram;
  return Violation::Ok;
}

inline Violation check_page_read(const BlockState& state, std::uint32_t page) {
  if (page >= state.next_program_page) return Violation::ReadUnwritten;
  return Violation::Ok;
}

}  // namespace ssdsim::nand
