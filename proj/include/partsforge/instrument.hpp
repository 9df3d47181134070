//===-- instrument.hpp - Scheme lowering ------------------------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Lowers IR to VM assembly, optionally inserting one or more of the three
// protection schemes:
//
//   ras  return addresses: pacib/autib on LR around non-leaf bodies, with
//        modifier (function_id << 16) | SP[15:0] using the entry SP.
//   cps  code pointers: pacia at creation, blraa at indirect calls, modifier
//        the type-id of the function signature. No instrumentation on
//        intermediate loads and stores of code pointers.
//   dps  data pointers: autda after loads, pacda before stores of values of
//        data-pointer type, modifier the type-id of the pointed-to type.
//
// The uninstrumented lowering is byte-identical except that modifier setup
// and PA instructions are omitted and indirect calls use blr instead of
// blraa; event site tags are emitted either way so dynamic counts can be
// compared across scheme choices.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "partsforge/tir.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace partsforge::instrument {

struct SchemeSet {
  bool ras = false;
  bool cps = false;
  bool dps = false;

  bool any() const { return ras || cps || dps; }
  std::string to_string() const;
  /// Accepts "none" or a '+'/',' separated subset of ras, cps, dps.
  static SchemeSet from_string(const std::string &s);
  /// All eight subsets, from none to ras+cps+dps.
  static std::vector<SchemeSet> all_combinations();

  friend bool operator==(const SchemeSet &, const SchemeSet &) = default;
};

/// One PA instruction in the emitted assembly, in emission order. The
/// assembled program contains exactly one PA instruction per entry.
struct PaSite {
  std::string function; ///< containing function, or __pa_init
  std::string kind;     ///< ras-sign, ras-auth, cps-sign, cps-auth,
                        ///< dps-sign, dps-auth
  std::string key;      ///< IA, IB, DA, DB
  std::string modifier; ///< "sp+function-id" or type-id as hex
  std::string type;     ///< canonical type encoding behind a type-id modifier
};

/// Bootstrap work: a global pointer slot signed before main.
struct InitSigning {
  std::string global;
  uint64_t slot_offset = 0; ///< byte offset within the global
  std::string target;       ///< symbol whose address the slot holds ("" = null)
  std::string key;          ///< IA or DA
  uint64_t modifier = 0;    ///< type-id
  std::string type;         ///< canonical encoding of the id'd type
};

struct StaticCounts {
  uint64_t nonleaf_functions = 0;
  uint64_t leaf_functions = 0;
  uint64_t cp_create_sites = 0;
  uint64_t indirect_call_sites = 0;
  uint64_t dp_load_sites = 0;
  uint64_t dp_store_sites = 0;
};

struct Manifest {
  SchemeSet schemes;
  uint64_t function_id_seed = 0;
  std::map<std::string, uint64_t> function_ids; ///< 48-bit, per function
  std::vector<PaSite> sites;
  std::vector<InitSigning> global_init;
  StaticCounts static_counts;
  bool contains_externs = false;

  std::string to_json() const;
  static Manifest from_json(const std::string &text);
};

struct LowerResult {
  std::string assembly;
  Manifest manifest;
};

/// 48-bit per-function nonces drawn from a seeded generator, collision-free
/// across the program, assigned in declaration order.
std::map<std::string, uint64_t> assign_function_ids(const tir::Program &prog,
                                                    uint64_t seed);

/// Lowers a validated program. Throws ContractViolation on programs that
/// cannot be lowered (externs are allowed; calling them faults at run time).
LowerResult lower(const tir::Program &prog, SchemeSet schemes, uint64_t seed);

} // namespace partsforge::instrument
