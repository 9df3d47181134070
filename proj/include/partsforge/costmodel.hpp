//===-- costmodel.hpp - Instruction-count cost model -----------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Overhead estimation without wall clocks. Every protection site costs one
// PA instruction plus the few moves that build its modifier, so the model
// prices a site as a fixed PA cost plus a small setup range and multiplies
// by dynamic event counts: non-leaf calls (which pay twice, sign and
// auth), code pointer creations, indirect calls, and data pointer loads
// and stores.
//
// For machines without PA, each PA instruction can be rewritten into the
// four-instruction exclusive-or analogue, a stand-in with a comparable
// pipeline cost. The rewrite is textual and pairs up: a signed value is
// perturbed on the sign side and restored on the auth side, so rewritten
// programs still run. The value-preserving variant appends a compensating
// exclusive-or with the same modifier; note that the composite of the
// three constants and the modifier is still not the identity on one side
// alone, only across a sign/auth pair.
//
//===----------------------------------------------------------------------===//

#ifndef PARTSFORGE_COSTMODEL_HPP
#define PARTSFORGE_COSTMODEL_HPP

#include <cstdint>
#include <string>

#include "partsforge/instrument.hpp"
#include "partsforge/vm.hpp"

namespace partsforge::costmodel {

struct CycleRange {
  uint64_t lo = 0;
  uint64_t hi = 0;

  CycleRange operator+(const CycleRange &o) const {
    return {lo + o.lo, hi + o.hi};
  }
  CycleRange scaled(uint64_t n) const { return {lo * n, hi * n}; }
  friend bool operator==(const CycleRange &, const CycleRange &) = default;
};

/// A PA instruction retires in a fixed number of cycles; materializing
/// its 64-bit modifier takes two to four more depending on how many
/// halfword moves the value needs.
struct CycleModel {
  uint64_t pa_instr_cycles = 4;
  CycleRange modifier_setup{2, 4};

  /// One signing or authentication site: setup plus the PA instruction.
  CycleRange per_pac_op() const {
    return {modifier_setup.lo + pa_instr_cycles,
            modifier_setup.hi + pa_instr_cycles};
  }
  /// A protected non-leaf call signs on entry and authenticates on exit.
  CycleRange per_nonleaf_call() const {
    return per_pac_op() + per_pac_op();
  }
};

struct OverheadEstimate {
  CycleRange ras;
  CycleRange cps;
  CycleRange dps;
  CycleRange total;
};

/// Prices the enabled schemes against dynamic event counts: return
/// address signing charges per non-leaf call, code pointer signing per
/// creation and per indirect call, data pointer signing per data pointer
/// load or store.
OverheadEstimate estimate_overhead(const vm::EventCounters &events,
                                   instrument::SchemeSet schemes,
                                   const CycleModel &model = CycleModel{});

/// The event counters a finished run accumulated.
vm::EventCounters count_events(const vm::ExitReport &report);

/// Runs the program to completion and returns its event counters.
/// Throws std::runtime_error if the run faults or exhausts its fuel.
vm::EventCounters count_events(const vm::Program &program,
                               const vm::RunOptions &opts);

/// Rewrites assembly text, replacing every PA instruction with four
/// exclusive-or instructions (three constants, then the modifier; the
/// zero-modifier forms use a zero immediate). Combined instructions keep
/// their plain remainder: an auth-branch becomes four exclusive-ors and a
/// branch. With `value_preserving` a fifth exclusive-or with the same
/// modifier is appended. All other lines pass through untouched.
std::string pa_analogue_rewrite(const std::string &assembly,
                                bool value_preserving = false);

} // namespace partsforge::costmodel

#endif // PARTSFORGE_COSTMODEL_HPP
