//===-- scenarios.cpp - The attack scenario suite -------------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Eight attack patterns, each bound to a small fixture with a probe marker
// (a deterministic program counter the script can break on) and a win
// marker that only tampered control or data flow can reach. The detected
// scenarios pit a forged or stale pointer against the scheme that signs
// that pointer class; the always-succeeding ones exercise reuse windows
// the schemes leave open by design: replay into the same function at the
// same stack depth, substitution among pointers sharing one modifier, and
// laundering a replayed pointer through a type conversion that re-signs.
//
//===----------------------------------------------------------------------===//

#include "partsforge/attack.hpp"
#include "partsforge/pa_core.hpp"

#include <stdexcept>

namespace partsforge::attack {

namespace {

using instrument::SchemeSet;

uint64_t marker_pc(const ScenarioContext &ctx, const std::string &name) {
  auto it = ctx.program.markers.find(name);
  if (it == ctx.program.markers.end())
    throw pa::ContractViolation("fixture has no marker '" + name + "'");
  return it->second;
}

uint64_t sym(const ScenarioContext &ctx, const std::string &name) {
  auto addr = ctx.program.symbol(name);
  if (!addr)
    throw pa::ContractViolation("fixture has no symbol '" + name + "'");
  return *addr;
}

uint64_t function_id(const ScenarioContext &ctx, const std::string &fn) {
  auto it = ctx.manifest.function_ids.find(fn);
  if (it == ctx.manifest.function_ids.end())
    throw pa::ContractViolation("manifest has no function id for '" + fn +
                                "'");
  return it->second;
}

/// Runs the program until `pc` is about to execute and returns SP there.
/// Used by the guessing scenario to learn the stack layout it attacks;
/// the adversary may observe a benign run before striking.
uint64_t sp_at(const ScenarioContext &ctx, uint64_t pc) {
  vm::RunOptions opts;
  opts.key_seed = ctx.key_seed;
  opts.cfg = ctx.cfg;
  vm::Machine m(ctx.program, opts);
  while (!m.done() && m.pc() != pc)
    m.step();
  if (m.done())
    throw pa::ContractViolation("probe run never reached target pc");
  return m.sp();
}

Trigger at_marker(const ScenarioContext &ctx, const std::string &probe,
                  uint64_t hit, std::vector<Action> actions) {
  Trigger t;
  t.on = Trigger::On::Pc;
  t.value = marker_pc(ctx, probe);
  t.hit = hit;
  t.actions = std::move(actions);
  return t;
}

constexpr int64_t kSavedLr = 8; ///< saved LR slot, relative to callee SP

/// S1: overwrite the saved return address with the raw address of a block
/// the program never reaches on its own.
AdversaryScript build_ret_forge(const ScenarioContext &ctx) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  uint64_t target = sym(ctx, "main__evilblk");
  s.triggers.push_back(at_marker(
      ctx, "probe_victim", 1,
      {Action::write_u64(MemRef::sp(kSavedLr), target)}));
  return s;
}

/// S2: record the signed return address inside f, replay it inside g.
/// Both are called from the same frame, so entry SP matches; only the
/// per-function id separates the two modifiers. The phase flag routes the
/// hijacked second arrival at f's return site to the win marker.
AdversaryScript build_ret_replay_cross(const ScenarioContext &ctx) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  s.triggers.push_back(at_marker(
      ctx, "probe_f", 1, {Action::record("lr", MemRef::sp(kSavedLr), 8)}));
  s.triggers.push_back(at_marker(
      ctx, "probe_g", 1,
      {Action::replay("lr", MemRef::sp(kSavedLr)),
       Action::write_u64(MemRef::abs(sym(ctx, "phase")), 1)}));
  return s;
}

/// S3: record the signed return address in f's first invocation, replay it
/// into the second. Same function, same entry SP, same id: the modifier is
/// identical, so the stale pointer authenticates even with signing on.
AdversaryScript build_ret_replay_same(const ScenarioContext &ctx) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  s.triggers.push_back(at_marker(
      ctx, "probe_f", 1, {Action::record("lr", MemRef::sp(kSavedLr), 8)}));
  s.triggers.push_back(at_marker(
      ctx, "probe_f", 2,
      {Action::replay("lr", MemRef::sp(kSavedLr)),
       Action::write_u64(MemRef::abs(sym(ctx, "phase")), 1)}));
  return s;
}

/// S4: substitute one signed function pointer for another before the
/// indirect call. The variants differ only in whether the donor function
/// shares the victim's signature, and with it the type-id modifier.
AdversaryScript build_cp_subst(const ScenarioContext &ctx,
                               const std::string &donor_slot) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  s.triggers.push_back(at_marker(
      ctx, "probe_main", 1,
      {Action::record("fp", MemRef::abs(sym(ctx, donor_slot)), 8),
       Action::replay("fp", MemRef::abs(sym(ctx, "fp")))}));
  return s;
}

/// S5: overwrite a stored data pointer with the raw address of a secret
/// cell. Unsigned, its PAC field is empty, so on-load authentication
/// rejects it; without data signing the program happily dereferences it.
AdversaryScript build_data_forge(const ScenarioContext &ctx) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  s.triggers.push_back(at_marker(
      ctx, "probe_main", 1,
      {Action::write_u64(MemRef::abs(sym(ctx, "gp")),
                         sym(ctx, "secret"))}));
  return s;
}

/// S6: a single brute-force guess at the return address PAC. The script
/// adapts to the defense: with signing off there is nothing to guess and
/// the raw target lands; with signing on the guess is built one bit away
/// from the true PAC, the worst case short of a lucky collision, so one
/// attempt is caught with certainty.
AdversaryScript build_bruteforce(const ScenarioContext &ctx) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  uint64_t target = sym(ctx, "main__evilblk");
  uint64_t forged = target;
  if (ctx.schemes.ras) {
    uint64_t entry_sp = sp_at(ctx, sym(ctx, "victim"));
    uint64_t modifier =
        (function_id(ctx, "victim") << 16) | (entry_sp & 0xFFFF);
    pa::KeySet keys = pa::KeySet::generate(ctx.key_seed);
    uint64_t pac =
        pa::pac_compute(target, modifier, keys[pa::KeyId::IB], ctx.cfg);
    uint64_t guess = pac ^ 1;
    forged = target | (guess << ctx.cfg.pac_shift());
  }
  s.triggers.push_back(at_marker(
      ctx, "probe_victim", 1,
      {Action::write_u64(MemRef::sp(kSavedLr), forged)}));
  return s;
}

/// S7: replay a signed pointer to a different cell of the same type, then
/// let the program's own conversion re-sign it for the destination type.
/// Every auth on the way passes, so the laundered pointer reads memory the
/// program never meant to expose.
AdversaryScript build_convert_launder(const ScenarioContext &ctx) {
  AdversaryScript s;
  s.success_marker = "attack_win";
  s.triggers.push_back(at_marker(
      ctx, "probe_main", 1,
      {Action::record("dp", MemRef::abs(sym(ctx, "pa2")), 8),
       Action::replay("dp", MemRef::abs(sym(ctx, "pa")))}));
  return s;
}

std::vector<Scenario> make_suite() {
  std::vector<Scenario> suite;
  suite.push_back({"S1", "return address forge", "ret_forge",
                   SchemeSet{true, false, false}, false, build_ret_forge});
  suite.push_back({"S2", "cross-function return replay, equal SP",
                   "ret_replay_cross", SchemeSet{true, false, false}, false,
                   build_ret_replay_cross});
  suite.push_back({"S3", "same-function cross-invocation return replay",
                   "ret_replay_same", SchemeSet{}, true,
                   build_ret_replay_same});
  suite.push_back({"S4a", "function pointer substitution, same signature",
                   "cp_subst_same", SchemeSet{}, true,
                   [](const ScenarioContext &ctx) {
                     return build_cp_subst(ctx, "fp2");
                   }});
  suite.push_back({"S4b", "function pointer substitution, new signature",
                   "cp_subst_diff", SchemeSet{false, true, false}, false,
                   [](const ScenarioContext &ctx) {
                     return build_cp_subst(ctx, "gw");
                   }});
  suite.push_back({"S5", "data pointer forge", "data_forge",
                   SchemeSet{false, false, true}, false, build_data_forge});
  suite.push_back({"S6", "single brute-force guess", "bruteforce",
                   SchemeSet{true, false, false}, false, build_bruteforce});
  suite.push_back({"S7", "conversion laundering", "convert_launder",
                   SchemeSet{}, true, build_convert_launder});
  return suite;
}

} // namespace

const std::vector<Scenario> &scenario_suite() {
  static const std::vector<Scenario> suite = make_suite();
  return suite;
}

const Scenario *find_scenario(const std::string &id) {
  for (const Scenario &s : scenario_suite())
    if (s.id == id)
      return &s;
  return nullptr;
}

Verdict expected_verdict(const Scenario &s, instrument::SchemeSet schemes) {
  if (s.always_succeeds)
    return Verdict::Succeeded;
  bool guarded = (s.requires_scheme.ras && schemes.ras) ||
                 (s.requires_scheme.cps && schemes.cps) ||
                 (s.requires_scheme.dps && schemes.dps);
  return guarded ? Verdict::Detected : Verdict::Succeeded;
}

AttackOutcome run_scenario(const Scenario &s, const tir::Program &source,
                           instrument::SchemeSet schemes, uint64_t seed) {
  instrument::LowerResult lowered = instrument::lower(source, schemes, seed);
  vm::AsmResult assembled = vm::assemble(lowered.assembly);
  if (!assembled.program) {
    std::string msg = "scenario fixture failed to assemble";
    if (!assembled.diagnostics.empty())
      msg += ": " + assembled.diagnostics.front().message;
    throw pa::ContractViolation(msg);
  }
  vm::RunOptions opts;
  opts.key_seed = seed;
  ScenarioContext ctx{*assembled.program, lowered.manifest, opts.cfg, seed,
                      schemes};
  AdversaryScript script = s.build(ctx);
  return execute_attack(*assembled.program, script, opts);
}

} // namespace partsforge::attack
