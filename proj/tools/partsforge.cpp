//===-- partsforge.cpp - Command line front end ---------------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// One binary, subcommand style: check and instrument operate on the typed
// IR, run and attack drive the virtual machine, guess covers the guessing
// entropy math and simulation, bench applies the cycle model, and macvec
// dumps MAC test vectors. Exit code 0 means success, 1 an expected domain
// failure (invalid input program, verdict contrary to --expect, a faulted
// run), and 2 a usage or input/output error.
//
//===----------------------------------------------------------------------===//

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "partsforge/attack.hpp"
#include "partsforge/costmodel.hpp"
#include "partsforge/entropy.hpp"
#include "partsforge/instrument.hpp"
#include "partsforge/pa_core.hpp"
#include "partsforge/tir.hpp"
#include "partsforge/vm.hpp"

using nlohmann::ordered_json;
using namespace partsforge;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;

/// Thrown for input/output and consistency problems that map to exit 2.
struct ToolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the input program is invalid; maps to exit 1 after the
/// diagnostics have been printed.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ToolError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ToolError("cannot write " + path);
  out << text;
}

bool ends_with(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

uint64_t parse_seed(const std::string &text, const std::string &origin) {
  errno = 0;
  char *end = nullptr;
  unsigned long long v = std::strtoull(text.c_str(), &end, 0);
  if (errno != 0 || end == text.c_str() || *end != '\0')
    throw ToolError("invalid seed '" + text + "' from " + origin);
  return v;
}

uint64_t default_seed() {
  const char *env = std::getenv("PARTSFORGE_SEED");
  return env ? parse_seed(env, "PARTSFORGE_SEED") : 0;
}

std::string hex(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%" PRIx64, v);
  return buf;
}

tir::Program load_tir(const std::string &path) {
  tir::ParseResult res = tir::parse(read_file(path));
  if (!res.program) {
    for (const auto &d : res.diagnostics)
      std::cerr << path << ":" << d.line << ": " << d.message << "\n";
    throw InvalidInput("invalid program " + path);
  }
  return std::move(*res.program);
}

vm::Program assemble_or_die(const std::string &text,
                            const std::string &origin) {
  vm::AsmResult res = vm::assemble(text);
  if (!res.program) {
    std::string msg = "assembly of " + origin + " failed";
    for (const auto &d : res.diagnostics)
      msg += "\n  line " + std::to_string(d.line) + ": " + d.message;
    throw ToolError(msg);
  }
  return std::move(*res.program);
}

pa::VaConfig make_config(unsigned va_bits, bool tagging) {
  try {
    return pa::VaConfig(va_bits, tagging);
  } catch (const std::invalid_argument &e) {
    throw ToolError(e.what());
  }
}

instrument::SchemeSet parse_schemes(const std::string &text) {
  try {
    return instrument::SchemeSet::from_string(text);
  } catch (const std::invalid_argument &e) {
    throw ToolError(e.what());
  }
}

ordered_json range_json(const costmodel::CycleRange &r) {
  return ordered_json::array({r.lo, r.hi});
}

ordered_json counters_json(const vm::EventCounters &ev) {
  return ordered_json{{"non_leaf_calls", ev.non_leaf_calls},
                      {"leaf_calls", ev.leaf_calls},
                      {"code_ptrs_created", ev.code_ptrs_created},
                      {"indirect_calls", ev.indirect_calls},
                      {"data_ptr_loads_stores", ev.data_ptr_loads_stores}};
}

ordered_json report_json(const vm::ExitReport &r) {
  ordered_json j{{"status", vm::status_name(r.status)},
                 {"exit_code", r.exit_code},
                 {"instructions", r.instructions_executed},
                 {"pa_instructions", r.pa_instructions_executed},
                 {"outputs", r.outputs},
                 {"markers", r.markers_reached},
                 {"events", counters_json(r.counters)}};
  if (r.fault) {
    j["fault"] = ordered_json{{"kind", vm::fault_kind_name(r.fault->kind)},
                              {"pc", r.fault->pc},
                              {"addr", r.fault->addr},
                              {"auth_failure", r.auth_failure_fault},
                              {"detail", r.fault->detail}};
  }
  return j;
}

// --- check ---------------------------------------------------------------

int cmd_check(const std::string &path) {
  tir::ParseResult res = tir::parse(read_file(path));
  if (!res.program) {
    for (const auto &d : res.diagnostics)
      std::cout << path << ":" << d.line << ": " << d.message << "\n";
    return kDomainFailure;
  }
  std::cout << path << ": ok (" << res.program->functions.size()
            << " functions, " << res.program->globals.size() << " globals)\n";
  return kOk;
}

// --- instrument ----------------------------------------------------------

int cmd_instrument(const std::string &path, const std::string &out_path,
                   const std::string &manifest_path,
                   instrument::SchemeSet schemes, uint64_t seed) {
  tir::Program prog = load_tir(path);
  instrument::LowerResult lowered = instrument::lower(prog, schemes, seed);
  assemble_or_die(lowered.assembly, path); // reject before writing anything
  if (out_path.empty())
    std::cout << lowered.assembly;
  else
    write_file(out_path, lowered.assembly);
  if (!manifest_path.empty())
    write_file(manifest_path, lowered.manifest.to_json());
  return kOk;
}

// --- run -----------------------------------------------------------------

vm::Program build_program(const std::string &path,
                          instrument::SchemeSet schemes, uint64_t seed,
                          instrument::Manifest *manifest_out) {
  if (ends_with(path, ".tvm")) {
    if (manifest_out)
      *manifest_out = instrument::Manifest{};
    return assemble_or_die(read_file(path), path);
  }
  tir::Program prog = load_tir(path);
  instrument::LowerResult lowered = instrument::lower(prog, schemes, seed);
  if (manifest_out)
    *manifest_out = std::move(lowered.manifest);
  return assemble_or_die(lowered.assembly, path);
}

int cmd_run(const std::string &path, instrument::SchemeSet schemes,
            uint64_t seed, uint64_t fuel, pa::VaConfig cfg, bool pa_enabled,
            const std::string &format) {
  vm::Program program = build_program(path, schemes, seed, nullptr);
  vm::RunOptions opts;
  opts.fuel = fuel;
  opts.key_seed = seed;
  opts.cfg = cfg;
  opts.pa_enabled = pa_enabled;
  vm::ExitReport report = vm::run(program, opts);

  if (format == "json") {
    ordered_json j{{"program", path},
                   {"schemes", schemes.to_string()},
                   {"seed", seed}};
    j.update(report_json(report));
    std::cout << j.dump(2) << "\n";
  } else {
    for (uint64_t v : report.outputs)
      std::cout << v << "\n";
    std::cerr << "status " << vm::status_name(report.status);
    if (report.status == vm::ExitReport::Status::Halted)
      std::cerr << " exit " << report.exit_code;
    if (report.fault)
      std::cerr << " (" << vm::fault_kind_name(report.fault->kind) << " at pc "
                << hex(report.fault->pc) << " addr " << hex(report.fault->addr)
                << (report.auth_failure_fault ? ", auth failure code" : "")
                << ")";
    std::cerr << ", " << report.instructions_executed << " instructions\n";
  }
  return report.status == vm::ExitReport::Status::Halted ? kOk
                                                         : kDomainFailure;
}

// --- attack --------------------------------------------------------------

int cmd_attack(const std::string &path, const std::string &scenario_id,
               instrument::SchemeSet schemes, uint64_t seed,
               const std::string &manifest_path, const std::string &expect,
               const std::string &format) {
  const attack::Scenario *scenario = attack::find_scenario(scenario_id);
  if (!scenario) {
    std::string known;
    for (const auto &s : attack::scenario_suite())
      known += (known.empty() ? "" : ", ") + s.id;
    throw ToolError("unknown scenario '" + scenario_id + "' (known: " + known +
                    ")");
  }

  std::optional<attack::Verdict> expected;
  if (!expect.empty()) {
    expected = attack::verdict_from_string(expect);
    if (!expected)
      throw ToolError("invalid --expect '" + expect +
                      "' (detected, succeeded, benign)");
  }

  instrument::Manifest manifest;
  vm::Program program = build_program(path, schemes, seed, &manifest);
  if (!manifest_path.empty())
    manifest = instrument::Manifest::from_json(read_file(manifest_path));

  vm::RunOptions opts;
  opts.key_seed = seed;
  attack::ScenarioContext ctx{program, manifest, opts.cfg, seed, schemes};
  attack::AttackOutcome outcome;
  try {
    outcome = attack::execute_attack(program, scenario->build(ctx), opts);
  } catch (const pa::ContractViolation &e) {
    throw ToolError("scenario " + scenario_id + " does not fit " + path +
                    ": " + e.what());
  }

  if (format == "json") {
    ordered_json j{{"scenario", scenario->id},
                   {"title", scenario->title},
                   {"program", path},
                   {"schemes", schemes.to_string()},
                   {"seed", seed},
                   {"verdict", attack::verdict_name(outcome.verdict)}};
    if (expected)
      j["expected"] = attack::verdict_name(*expected);
    ordered_json evidence;
    if (outcome.verdict == attack::Verdict::Succeeded) {
      evidence = ordered_json{{"kind", "marker"}, {"marker", "attack_win"}};
      if (outcome.marker_pc)
        evidence["pc"] = *outcome.marker_pc;
    } else if (outcome.report.fault) {
      evidence = ordered_json{
          {"kind", "fault"},
          {"fault_kind", vm::fault_kind_name(outcome.report.fault->kind)},
          {"pc", outcome.report.fault->pc},
          {"addr", outcome.report.fault->addr},
          {"auth_failure", outcome.report.auth_failure_fault}};
    } else {
      evidence = ordered_json{{"kind", "none"}};
    }
    j["evidence"] = evidence;
    j["exit"] = report_json(outcome.report);
    j["log"] = outcome.log;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << scenario->id << " (" << scenario->title
              << ") schemes=" << schemes.to_string() << " seed=" << seed
              << "\n";
    std::cout << "verdict: " << attack::verdict_name(outcome.verdict);
    if (expected)
      std::cout << " (expected " << attack::verdict_name(*expected) << ")";
    std::cout << "\n";
    if (outcome.verdict == attack::Verdict::Succeeded && outcome.marker_pc)
      std::cout << "evidence: marker attack_win at " << hex(*outcome.marker_pc)
                << "\n";
    else if (outcome.report.fault)
      std::cout << "evidence: "
                << vm::fault_kind_name(outcome.report.fault->kind) << " at pc "
                << hex(outcome.report.fault->pc) << " addr "
                << hex(outcome.report.fault->addr)
                << (outcome.report.auth_failure_fault
                        ? " carrying an auth failure code"
                        : "")
                << "\n";
  }
  if (expected && outcome.verdict != *expected)
    return kDomainFailure;
  return kOk;
}

// --- guess ---------------------------------------------------------------

int cmd_guess(unsigned pac_bits, double p, bool simulate,
              const std::string &policy_text, uint64_t trials, uint64_t seed,
              uint64_t max_attempts, const std::string &format) {
  auto policy = entropy::policy_from_string(policy_text);
  if (!policy)
    throw ToolError("invalid --policy '" + policy_text +
                    "' (restart, sibling)");
  try {
    if (!simulate) {
      uint64_t n = *policy == entropy::Policy::Sibling
                       ? entropy::sibling_average_guesses(pac_bits)
                       : entropy::guess_attempts(p, pac_bits);
      std::cout << n << "\n";
      return kOk;
    }
    entropy::BruteforceStats stats =
        entropy::simulate_bruteforce(pac_bits, *policy, trials, seed,
                                     max_attempts);
    if (format == "json") {
      ordered_json j{{"pac_bits", pac_bits},
                     {"policy", entropy::policy_name(*policy)},
                     {"trials", stats.trials()},
                     {"seed", seed},
                     {"max_attempts", max_attempts},
                     {"successes", stats.successes()},
                     {"success_rate", stats.success_within(~uint64_t{0})},
                     {"mean_attempts", stats.mean_attempts()}};
      if (*policy == entropy::Policy::Restart) {
        uint64_t half = entropy::guess_attempts(0.5, pac_bits);
        j["median_formula"] = half;
        j["success_within_median_formula"] = stats.success_within(half);
      } else {
        j["sibling_average"] = entropy::sibling_average_guesses(pac_bits);
      }
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "policy " << entropy::policy_name(*policy) << " pac-bits "
                << pac_bits << " trials " << stats.trials() << " seed " << seed;
      if (max_attempts)
        std::cout << " cap " << max_attempts;
      std::cout << "\n";
      std::cout << "successes " << stats.successes() << " ("
                << stats.success_within(~uint64_t{0}) << ")\n";
      std::cout << "mean attempts " << stats.mean_attempts() << "\n";
      if (*policy == entropy::Policy::Restart) {
        uint64_t half = entropy::guess_attempts(0.5, pac_bits);
        std::cout << "success within " << half << " attempts: "
                  << stats.success_within(half) << "\n";
      }
    }
  } catch (const std::domain_error &e) {
    throw ToolError(e.what());
  }
  return kOk;
}

// --- bench ---------------------------------------------------------------

void print_bench_table(const std::vector<ordered_json> &rows) {
  std::printf("%-24s %-12s %16s %16s %10s %10s\n", "program", "schemes",
              "cycles lo", "cycles hi", "ratio lo", "ratio hi");
  for (const auto &row : rows) {
    uint64_t lo = row["overhead_cycles"]["total"][0];
    uint64_t hi = row["overhead_cycles"]["total"][1];
    std::string ratio_lo = "-", ratio_hi = "-";
    if (row.contains("overhead_ratio")) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3fx",
                    row["overhead_ratio"][0].get<double>());
      ratio_lo = buf;
      std::snprintf(buf, sizeof buf, "%.3fx",
                    row["overhead_ratio"][1].get<double>());
      ratio_hi = buf;
    }
    std::printf("%-24s %-12s %16" PRIu64 " %16" PRIu64 " %10s %10s\n",
                row["name"].get<std::string>().c_str(),
                row["schemes"].get<std::string>().c_str(), lo, hi,
                ratio_lo.c_str(), ratio_hi.c_str());
  }
}

ordered_json model_json(const costmodel::CycleModel &model) {
  return ordered_json{
      {"pa_instr_cycles", model.pa_instr_cycles},
      {"modifier_setup", range_json(model.modifier_setup)},
      {"per_pac_op", range_json(model.per_pac_op())},
      {"per_nonleaf_call", range_json(model.per_nonleaf_call())}};
}

ordered_json overhead_json(const costmodel::OverheadEstimate &est) {
  return ordered_json{{"ras", range_json(est.ras)},
                      {"cps", range_json(est.cps)},
                      {"dps", range_json(est.dps)},
                      {"total", range_json(est.total)}};
}

vm::EventCounters counters_from_json(const ordered_json &j) {
  vm::EventCounters ev;
  auto field = [&](const char *name) -> uint64_t {
    return j.contains(name) ? j.at(name).get<uint64_t>() : 0;
  };
  ev.non_leaf_calls = field("non_leaf_calls");
  ev.leaf_calls = field("leaf_calls");
  ev.code_ptrs_created = field("code_ptrs_created");
  ev.indirect_calls = field("indirect_calls");
  ev.data_ptr_loads_stores = field("data_ptr_loads_stores");
  return ev;
}

int cmd_bench(const std::string &path, const std::string &from_counts,
              instrument::SchemeSet schemes, uint64_t seed, uint64_t fuel,
              pa::VaConfig cfg, const std::string &format) {
  costmodel::CycleModel model;
  std::vector<ordered_json> rows;

  if (!from_counts.empty()) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(read_file(from_counts));
    } catch (const ordered_json::parse_error &e) {
      throw ToolError(std::string("invalid counts file: ") + e.what());
    }
    if (!doc.is_array())
      doc = ordered_json::array({doc});
    for (const auto &entry : doc) {
      vm::EventCounters ev = counters_from_json(entry);
      costmodel::OverheadEstimate est =
          costmodel::estimate_overhead(ev, schemes, model);
      rows.push_back(ordered_json{
          {"name", entry.contains("name") ? entry["name"].get<std::string>()
                                          : std::string("counts")},
          {"schemes", schemes.to_string()},
          {"events", counters_json(ev)},
          {"overhead_cycles", overhead_json(est)}});
    }
  } else {
    tir::Program prog = load_tir(path);
    instrument::LowerResult inst = instrument::lower(prog, schemes, seed);
    instrument::LowerResult base =
        instrument::lower(prog, instrument::SchemeSet{}, seed);
    vm::RunOptions opts;
    opts.fuel = fuel;
    opts.key_seed = seed;
    opts.cfg = cfg;

    vm::ExitReport inst_report =
        vm::run(assemble_or_die(inst.assembly, path), opts);
    vm::ExitReport base_report =
        vm::run(assemble_or_die(base.assembly, path), opts);
    if (inst_report.status != vm::ExitReport::Status::Halted)
      throw ToolError("instrumented run did not halt: " +
                      std::string(vm::status_name(inst_report.status)));

    costmodel::OverheadEstimate est =
        costmodel::estimate_overhead(inst_report.counters, schemes, model);
    double base_n = static_cast<double>(base_report.instructions_executed);
    ordered_json row{
        {"name", path},
        {"schemes", schemes.to_string()},
        {"seed", seed},
        {"events", counters_json(inst_report.counters)},
        {"baseline_instructions", base_report.instructions_executed},
        {"instrumented_instructions", inst_report.instructions_executed},
        {"overhead_cycles", overhead_json(est)},
        {"overhead_ratio",
         ordered_json::array(
             {1.0 + static_cast<double>(est.total.lo) / base_n,
              1.0 + static_cast<double>(est.total.hi) / base_n})}};
    rows.push_back(std::move(row));
  }

  if (format == "json") {
    ordered_json j{{"model", model_json(model)},
                   {"rows", rows}};
    std::cout << j.dump(2) << "\n";
  } else {
    print_bench_table(rows);
  }
  return kOk;
}

// --- macvec --------------------------------------------------------------

int cmd_macvec(uint64_t count, uint64_t seed, pa::VaConfig cfg) {
  std::mt19937_64 rng(seed);
  int pac_digits = (static_cast<int>(cfg.pac_bits()) + 3) / 4;
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t ptr = rng() & cfg.addr_mask();
    uint64_t mod = rng();
    pa::Key128 key{rng(), rng()};
    uint64_t pac = pa::pac_compute(ptr, mod, key, cfg);
    std::printf("%016" PRIx64 " %016" PRIx64 " %016" PRIx64 " %016" PRIx64
                " %0*" PRIx64 "\n",
                ptr, mod, key.hi, key.lo, pac_digits, pac);
  }
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"PartsForge: a pointer authentication laboratory"};
  app.require_subcommand(1);

  std::string seed_text;
  try {
    seed_text = std::to_string(default_seed());
  } catch (const ToolError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  // check
  std::string check_file;
  CLI::App *check = app.add_subcommand("check", "Parse and validate a program");
  check->add_option("file", check_file, "program (.tir)")->required();

  // instrument
  std::string inst_file, inst_out, inst_manifest, inst_schemes = "ras,cps,dps",
                          inst_seed;
  CLI::App *inst =
      app.add_subcommand("instrument", "Lower a program to assembly");
  inst->add_option("file", inst_file, "program (.tir)")->required();
  inst->add_option("-o,--out", inst_out, "assembly output path (.tvm)");
  inst->add_option("--manifest", inst_manifest, "manifest output path (.json)");
  inst->add_option("--schemes", inst_schemes, "ras,cps,dps subset or 'none'");
  inst->add_option("--seed", inst_seed, "function id seed");

  // run
  std::string run_file, run_schemes = "none", run_seed, run_format = "text";
  uint64_t run_fuel = 100'000'000;
  unsigned run_va = 39;
  bool run_tagging = false, run_no_pa = false;
  CLI::App *runc = app.add_subcommand("run", "Execute a program benignly");
  runc->add_option("file", run_file, "program (.tir or .tvm)")->required();
  runc->add_option("--schemes", run_schemes, "schemes for .tir lowering");
  runc->add_option("--seed", run_seed, "key and function id seed");
  runc->add_option("--fuel", run_fuel, "instruction budget");
  runc->add_option("--va-bits", run_va, "virtual address bits (36-52)");
  runc->add_flag("--tagging", run_tagging, "enable top byte tagging");
  runc->add_flag("--no-pa", run_no_pa, "disable PA semantics");
  runc->add_option("--report", run_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  // attack
  std::string atk_file, atk_scenario, atk_schemes = "ras,cps,dps", atk_seed,
                        atk_manifest, atk_expect, atk_format = "text";
  CLI::App *atk = app.add_subcommand("attack", "Run an attack scenario");
  atk->add_option("file", atk_file, "program (.tir or .tvm)")->required();
  atk->add_option("--scenario", atk_scenario, "scenario id, e.g. S1")
      ->required();
  atk->add_option("--schemes", atk_schemes, "active schemes");
  atk->add_option("--seed", atk_seed, "key and function id seed");
  atk->add_option("--manifest", atk_manifest,
                  "manifest for .tvm inputs needing function ids");
  atk->add_option("--expect", atk_expect,
                  "assert the verdict: detected, succeeded or benign");
  atk->add_option("--report", atk_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  // guess
  unsigned guess_bits = 16;
  double guess_p = 0.5;
  bool guess_sim = false;
  std::string guess_policy = "restart", guess_seed, guess_format = "text";
  uint64_t guess_trials = 100'000, guess_cap = 0;
  CLI::App *guess =
      app.add_subcommand("guess", "Guessing entropy: formulas and simulation");
  guess->add_option("--pac-bits", guess_bits, "PAC width in bits")->required();
  guess->add_option("--p", guess_p, "target success probability");
  guess->add_flag("--simulate", guess_sim, "sample the guessing game");
  guess->add_option("--policy", guess_policy, "restart or sibling");
  guess->add_option("--trials", guess_trials, "simulation trials");
  guess->add_option("--seed", guess_seed, "simulation seed");
  guess->add_option("--max-attempts", guess_cap, "per-trial attempt cap");
  guess->add_option("--report", guess_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  // bench
  std::string bench_file, bench_counts, bench_schemes = "ras,cps,dps",
                          bench_seed, bench_format = "table";
  uint64_t bench_fuel = 100'000'000;
  unsigned bench_va = 39;
  bool bench_tagging = false;
  CLI::App *bench =
      app.add_subcommand("bench", "Event counts and modeled overhead");
  bench->add_option("file", bench_file, "program (.tir)");
  bench->add_option("--from-counts", bench_counts,
                    "apply the model to a counts file instead");
  bench->add_option("--schemes", bench_schemes, "schemes to price");
  bench->add_option("--seed", bench_seed, "key and function id seed");
  bench->add_option("--fuel", bench_fuel, "instruction budget");
  bench->add_option("--va-bits", bench_va, "virtual address bits (36-52)");
  bench->add_flag("--tagging", bench_tagging, "enable top byte tagging");
  bench->add_option("--report", bench_format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));

  // macvec
  uint64_t mv_count = 8;
  std::string mv_seed;
  unsigned mv_va = 39;
  bool mv_tagging = false;
  CLI::App *mv =
      app.add_subcommand("macvec", "Print MAC test vectors (developer aid)");
  mv->add_option("--count", mv_count, "number of vectors");
  mv->add_option("--seed", mv_seed, "generator seed");
  mv->add_option("--va-bits", mv_va, "virtual address bits (36-52)");
  mv->add_flag("--tagging", mv_tagging, "enable top byte tagging");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  auto seed_or_default = [&](const std::string &text) {
    return text.empty() ? parse_seed(seed_text, "PARTSFORGE_SEED")
                        : parse_seed(text, "--seed");
  };

  try {
    if (check->parsed())
      return cmd_check(check_file);
    if (inst->parsed())
      return cmd_instrument(inst_file, inst_out, inst_manifest,
                            parse_schemes(inst_schemes),
                            seed_or_default(inst_seed));
    if (runc->parsed())
      return cmd_run(run_file, parse_schemes(run_schemes),
                     seed_or_default(run_seed), run_fuel,
                     make_config(run_va, run_tagging), !run_no_pa, run_format);
    if (atk->parsed())
      return cmd_attack(atk_file, atk_scenario, parse_schemes(atk_schemes),
                        seed_or_default(atk_seed), atk_manifest, atk_expect,
                        atk_format);
    if (guess->parsed())
      return cmd_guess(guess_bits, guess_p, guess_sim, guess_policy,
                       guess_trials, seed_or_default(guess_seed), guess_cap,
                       guess_format);
    if (bench->parsed()) {
      if (bench_file.empty() && bench_counts.empty())
        throw ToolError("bench needs a program or --from-counts");
      return cmd_bench(bench_file, bench_counts, parse_schemes(bench_schemes),
                       seed_or_default(bench_seed), bench_fuel,
                       make_config(bench_va, bench_tagging), bench_format);
    }
    if (mv->parsed())
      return cmd_macvec(mv_count, seed_or_default(mv_seed),
                        make_config(mv_va, mv_tagging));
  } catch (const InvalidInput &) {
    return kDomainFailure;
  } catch (const ToolError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const vm::LoadError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
