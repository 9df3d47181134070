//===-- vm.hpp - Register machine with pointer authentication ---*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A small AArch64-flavoured machine: X0..X30 (X29 frame pointer, X30 link
// register), SP, PC, 64-bit loads and stores, and the PA instruction family.
// Code is interpreted from its assembled form; instruction slots are 4 bytes
// of address space so code addresses look conventional. Code pages are
// readable and executable but never writable; data and stack pages are never
// executable. PA keys live in privileged state installed before the first
// instruction and are unreachable from program or adversary.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "partsforge/diag.hpp"
#include "partsforge/pa_core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace partsforge::vm {

// Address space layout. Everything sits below 2^36 so every supported
// VaConfig treats mapped addresses as canonical.
constexpr uint64_t kPageSize = 4096;
constexpr uint64_t kCodeBase = 0x10000;
constexpr uint64_t kDataBase = 0x100000;
constexpr uint64_t kStackTop = 0x200000;
constexpr uint64_t kStackSize = 0x10000;
/// Branching or returning here halts cleanly with X0 as exit code. It is the
/// initial link register value, so a bare `ret` from the entry function exits.
constexpr uint64_t kHaltAddr = 0x4;

constexpr int kRegFP = 29;
constexpr int kRegLR = 30;
constexpr int kRegSP = 31; ///< internal register-file index for SP

enum class Op {
  Mov, MovImm, MovSym, Movk,
  Add, AddImm, Sub, SubImm, Mul, MulImm, Eor, EorImm,
  Cmp, CmpImm,
  B, Bcond, Bl, Blr, Br, Ret,
  Ldr, Str, Ldp, Stp,
  Out, Halt, Nop,
  Pac, Aut,          // key-indexed standalone sign/authenticate
  Pacga, Xpaci, Xpacd,
  Retaa, Retab, Braa, Brab, Blraa, Blrab, Ldraa, Ldrab,
};

enum class Cond { Eq, Ne, Lt, Ge };

struct Instr {
  Op op;
  int rd = -1, rn = -1, rm = -1;
  uint64_t imm = 0;
  Cond cond = Cond::Eq;
  KeyId key = KeyId::IA;  // Pac/Aut
  bool zero_mod = false;  // paciza-style sugar: modifier fixed to zero
  int line = 0;
};

/// Why an instrumentation site exists; used to count scheme-relevant events.
/// Tags are emitted for every lowering, including the uninstrumented one, so
/// event counts can be compared across scheme choices.
enum class EventKind {
  NonLeafEntry,
  LeafEntry,
  CpCreate,
  IndirectCall,
  DpLoad,
  DpStore,
};

struct EventCounters {
  uint64_t non_leaf_calls = 0;
  uint64_t leaf_calls = 0;
  uint64_t code_ptrs_created = 0;
  uint64_t indirect_calls = 0;
  uint64_t data_ptr_loads_stores = 0;

  void bump(EventKind k);
  friend bool operator==(const EventCounters &, const EventCounters &) = default;
};

struct Program {
  std::vector<Instr> code;
  std::vector<uint8_t> data;
  std::map<std::string, uint64_t> symbols; ///< label -> absolute address
  std::map<std::string, uint64_t> markers; ///< marker name -> code address
  std::map<uint64_t, EventKind> sites;     ///< code address -> event kind
  std::optional<uint64_t> global_init;     ///< bootstrap entry, if declared
  bool has_combined_pa = false; ///< retaa/braa/blraa/ldraa/pacga present

  std::optional<uint64_t> symbol(const std::string &name) const;
};

struct AsmResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};

/// Assembles text into a program. Two-pass; labels are shared between code
/// and data. `.site <kind>` and `.marker <name>` attach to the next
/// instruction. See docs/tvm.md for the format.
AsmResult assemble(const std::string &source);

struct FaultRecord {
  enum class Kind { Translation, Permission, Halt } kind;
  uint64_t pc = 0;
  uint64_t addr = 0;
  std::string detail;
};

const char *fault_kind_name(FaultRecord::Kind k);

struct ExitReport {
  enum class Status { Halted, Faulted, FuelExhausted } status = Status::Halted;
  uint64_t exit_code = 0;
  std::optional<FaultRecord> fault;
  bool auth_failure_fault = false; ///< fault address carries a PA failure code
  EventCounters counters;
  uint64_t instructions_executed = 0;
  uint64_t pa_instructions_executed = 0;
  std::vector<uint64_t> outputs;
  std::vector<std::string> markers_reached; ///< first-hit order
};

const char *status_name(ExitReport::Status s);

struct RunOptions {
  std::string entry;              ///< default: __start if present, else main
  uint64_t fuel = 100'000'000;
  uint64_t key_seed = 0;
  VaConfig cfg;
  bool pa_enabled = true;
};

/// Thrown when a program cannot be started (unknown entry, or PA-dependent
/// combined instructions present while PA is disabled).
class LoadError : public std::runtime_error {
public:
  explicit LoadError(const std::string &msg) : std::runtime_error(msg) {}
};

class Machine {
public:
  Machine(const Program &program, const RunOptions &opts);

  bool done() const { return done_; }
  void step();
  void run(); ///< steps until done

  uint64_t pc() const { return pc_; }
  uint64_t instructions_executed() const { return executed_; }
  uint64_t reg(int index) const { return regs_[static_cast<size_t>(index)]; }
  uint64_t sp() const { return regs_[kRegSP]; }

  /// Adversary memory access: reads reach every mapped byte including code;
  /// writes are refused on executable pages. Returns false on any unmapped
  /// byte or refused write.
  bool adversary_read(uint64_t addr, void *out, uint64_t len) const;
  bool adversary_write(uint64_t addr, const void *src, uint64_t len);

  const ExitReport &report() const { return report_; }
  ExitReport take_report();

private:
  struct PageData {
    std::array<uint8_t, kPageSize> bytes{};
    bool writable = false;
    bool executable = false;
  };

  const Program &prog_;
  VaConfig cfg_;
  KeySet keys_;
  bool pa_enabled_;
  uint64_t fuel_;

  std::array<uint64_t, 32> regs_{};
  uint64_t pc_ = 0;
  int64_t cmp_lhs_ = 0, cmp_rhs_ = 0;
  std::map<uint64_t, PageData> pages_;
  bool done_ = false;
  uint64_t executed_ = 0;
  ExitReport report_;
  std::map<std::string, bool> marker_seen_;

  void map_region(uint64_t base, uint64_t size, bool writable, bool executable);
  PageData *page_at(uint64_t addr);
  const PageData *page_at(uint64_t addr) const;

  bool translate(uint64_t addr, uint64_t &effective) const;
  bool mem_read64(uint64_t addr, uint64_t &value, FaultRecord &fault);
  bool mem_write64(uint64_t addr, uint64_t value, FaultRecord &fault);

  void finish_halt();
  void finish_fault(FaultRecord fault);
  void branch_to(uint64_t target);
  uint64_t do_auth(uint64_t value, uint64_t modifier, KeyId key);
  void execute(const Instr &ins);
};

/// Convenience wrapper: construct, run to completion, return the report.
ExitReport run(const Program &program, const RunOptions &opts = {});

} // namespace partsforge::vm
