//===-- attack.hpp - Scripted adversary and attack scenarios ---*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A scripted adversary with full read access to mapped memory and write
// access to non-executable pages. Scripts are ordered lists of triggers;
// each trigger is a breakpoint (program counter or instruction count) with
// a list of actions that fire between instructions. The adversary has no
// access to the machine's keys and cannot alter code pages.
//
// An attack outcome is judged solely from the machine's exit report:
// reaching the script's success marker means the attack paid off, a fault
// whose address carries a pointer authentication failure code means the
// defense caught the tamper, and anything else is benign.
//
//===----------------------------------------------------------------------===//

#ifndef PARTSFORGE_ATTACK_HPP
#define PARTSFORGE_ATTACK_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "partsforge/instrument.hpp"
#include "partsforge/vm.hpp"

namespace partsforge::attack {

/// An address operand for an action. Absolute addresses name globals and
/// code; SP-relative addresses resolve against the stack pointer at the
/// moment the trigger fires, which is how scripts reach stack slots whose
/// absolute position depends on call depth.
struct MemRef {
  enum class Base { Absolute, SpRelative };
  Base base = Base::Absolute;
  int64_t value = 0; ///< absolute address, or signed offset from SP

  static MemRef abs(uint64_t addr) {
    return {Base::Absolute, static_cast<int64_t>(addr)};
  }
  static MemRef sp(int64_t offset) { return {Base::SpRelative, offset}; }
};

struct Action {
  enum class Kind { Read, Write, Record, Replay };
  Kind kind = Kind::Read;
  MemRef where;
  uint64_t len = 0;           ///< read / record length in bytes
  std::vector<uint8_t> bytes; ///< write payload
  std::string tag;            ///< record / replay tape name

  static Action read(MemRef where, uint64_t len);
  static Action write(MemRef where, std::vector<uint8_t> bytes);
  static Action write_u64(MemRef where, uint64_t value);
  static Action record(std::string tag, MemRef where, uint64_t len);
  static Action replay(std::string tag, MemRef where);
};

/// A breakpoint plus the actions to run when it is hit. Pc triggers fire
/// immediately before the instruction at `value` executes; `hit` selects
/// which arrival (1-based), with 0 meaning every arrival. Icount triggers
/// fire once, at the point where exactly `value` instructions have retired.
struct Trigger {
  enum class On { Pc, Icount };
  On on = On::Pc;
  uint64_t value = 0;
  uint64_t hit = 1;
  std::vector<Action> actions;
};

struct AdversaryScript {
  std::vector<Trigger> triggers;
  /// Marker whose execution counts as attack success. Empty means no
  /// marker qualifies, so the run can only end detected or benign.
  std::string success_marker;
};

enum class Verdict { Detected, Succeeded, Benign };

const char *verdict_name(Verdict v);

/// Parses "detected" / "succeeded" / "benign" (case-insensitive).
std::optional<Verdict> verdict_from_string(const std::string &s);

struct AttackOutcome {
  Verdict verdict = Verdict::Benign;
  vm::ExitReport report;
  /// Address of the success marker when the verdict is Succeeded.
  std::optional<uint64_t> marker_pc;
  /// One line per fired action and per refused access, in firing order.
  std::vector<std::string> log;
};

/// Runs `program` to completion under `script`. Throws
/// std::invalid_argument on malformed scripts: empty actions, zero-length
/// reads or records, empty write payloads, or replay of a tag no record
/// action defines. Writes that touch executable pages or unmapped memory
/// are refused at run time and logged, never applied partially.
AttackOutcome execute_attack(const vm::Program &program,
                             const AdversaryScript &script,
                             const vm::RunOptions &opts);

/// Convenience overload: default config, key material drawn from `seed`.
AttackOutcome execute_attack(const vm::Program &program,
                             const AdversaryScript &script, uint64_t seed);

/// Everything a scenario needs to aim its script: the assembled program
/// (symbols, markers), the instrumentation manifest (function ids), the
/// machine configuration and key seed, and which schemes are active.
struct ScenarioContext {
  const vm::Program &program;
  const instrument::Manifest &manifest;
  pa::VaConfig cfg;
  uint64_t key_seed = 0;
  instrument::SchemeSet schemes;
};

/// A named attack pattern bound to one fixture shape. `requires_scheme`
/// names the scheme whose instrumentation the attack collides with; when
/// that scheme is off the attack goes through. Scenarios for which no
/// scheme helps (`always_succeeds`) document residual weaknesses.
struct Scenario {
  std::string id;
  std::string title;
  std::string fixture; ///< fixture stem, e.g. "ret_forge" for ret_forge.tir
  instrument::SchemeSet requires_scheme;
  bool always_succeeds = false;
  std::function<AdversaryScript(const ScenarioContext &)> build;
};

/// The scenario suite, in id order: S1, S2, S3, S4a, S4b, S5, S6, S7.
const std::vector<Scenario> &scenario_suite();

const Scenario *find_scenario(const std::string &id);

/// The verdict the suite is expected to produce for `s` under `schemes`:
/// Succeeded for the always-succeeding scenarios, otherwise Detected
/// exactly when the scheme the attack collides with is enabled.
Verdict expected_verdict(const Scenario &s, instrument::SchemeSet schemes);

/// Lowers the scenario's source program under `schemes`, assembles it,
/// builds the script against the result, and executes the attack.
AttackOutcome run_scenario(const Scenario &s, const tir::Program &source,
                           instrument::SchemeSet schemes, uint64_t seed);

} // namespace partsforge::attack

#endif // PARTSFORGE_ATTACK_HPP
