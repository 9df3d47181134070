//===- test_costmodel.cpp - Overhead estimates and the PA analogue --------===//
//
// Part of the partsforge project, under the Apache License v2.0.
// See LICENSE for license information.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "json.hpp"
#include "partsforge/costmodel.hpp"
#include "partsforge/instrument.hpp"
#include "partsforge/tir.hpp"
#include "partsforge/vm.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace partsforge;
using costmodel::CycleModel;
using costmodel::CycleRange;
using instrument::SchemeSet;

namespace {

std::string read_fixture(const std::string &name) {
  std::ifstream in(std::filesystem::path(PARTSFORGE_FIXTURE_DIR) / name,
                   std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open fixture " << name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

tir::Program parse_ok(const std::string &text) {
  tir::ParseResult r = tir::parse(text);
  REQUIRE(r.program.has_value());
  return *r.program;
}

vm::Program assemble_ok(const std::string &src) {
  vm::AsmResult r = vm::assemble(src);
  REQUIRE_MESSAGE(r.program.has_value(),
                  (r.diagnostics.empty() ? "no diagnostics"
                                         : r.diagnostics.front().message));
  return *r.program;
}

vm::EventCounters table_counters(const std::string &name) {
  nlohmann::json doc =
      nlohmann::json::parse(read_fixture("table4_counts.json"));
  for (const auto &row : doc) {
    if (row.at("name").get<std::string>() != name)
      continue;
    vm::EventCounters c;
    c.non_leaf_calls = row.at("non_leaf_calls").get<uint64_t>();
    c.leaf_calls = row.at("leaf_calls").get<uint64_t>();
    c.code_ptrs_created = row.at("code_ptrs_created").get<uint64_t>();
    c.indirect_calls = row.at("indirect_calls").get<uint64_t>();
    c.data_ptr_loads_stores =
        row.at("data_ptr_loads_stores").get<uint64_t>();
    return c;
  }
  FAIL("no such benchmark row: " << name);
  return {};
}

} // namespace

TEST_SUITE("costmodel") {

TEST_CASE("cycle range arithmetic") {
  CycleRange a{2, 4};
  CycleRange b{6, 8};
  CHECK(a + b == CycleRange{8, 12});
  CHECK(a.scaled(3) == CycleRange{6, 12});
  CHECK(a.scaled(0) == CycleRange{0, 0});
  CHECK(CycleRange{} == CycleRange{0, 0});
}

TEST_CASE("default model prices") {
  CycleModel m;
  CHECK(m.pa_instr_cycles == 4);
  CHECK(m.modifier_setup == CycleRange{2, 4});
  CHECK(m.per_pac_op() == CycleRange{6, 8});
  CHECK(m.per_nonleaf_call() == CycleRange{12, 16});
}

TEST_CASE("numeric_sort overhead under return address signing") {
  vm::EventCounters c = table_counters("numeric_sort");
  costmodel::OverheadEstimate e =
      costmodel::estimate_overhead(c, SchemeSet{true, false, false});
  CHECK(e.ras == CycleRange{21624, 28832});
  CHECK(e.cps == CycleRange{0, 0});
  CHECK(e.dps == CycleRange{0, 0});
  CHECK(e.total == e.ras);
}

TEST_CASE("numeric_sort overhead under the full stack") {
  vm::EventCounters c = table_counters("numeric_sort");
  costmodel::OverheadEstimate e =
      costmodel::estimate_overhead(c, SchemeSet{true, true, true});
  CHECK(e.ras == CycleRange{21624, 28832});
  CHECK(e.cps == CycleRange{90, 120});
  CHECK(e.dps == CycleRange{1813276998, 2417702664});
  CHECK(e.total == CycleRange{21624 + 90 + 1813276998,
                              28832 + 120 + 2417702664});
}

TEST_CASE("disabled schemes and empty counters cost nothing") {
  vm::EventCounters c = table_counters("fourier");
  costmodel::OverheadEstimate off =
      costmodel::estimate_overhead(c, SchemeSet{});
  CHECK(off.total == CycleRange{0, 0});
  costmodel::OverheadEstimate on =
      costmodel::estimate_overhead(vm::EventCounters{},
                                   SchemeSet{true, true, true});
  CHECK(on.total == CycleRange{0, 0});
}

TEST_CASE("adding a scheme never lowers the estimate") {
  vm::EventCounters c = table_counters("huffman");
  for (SchemeSet base : SchemeSet::all_combinations()) {
    costmodel::OverheadEstimate lo = costmodel::estimate_overhead(c, base);
    SchemeSet more = base;
    more.dps = true;
    costmodel::OverheadEstimate hi = costmodel::estimate_overhead(c, more);
    CHECK(hi.total.lo >= lo.total.lo);
    CHECK(hi.total.hi >= lo.total.hi);
  }
}

TEST_CASE("count_events reads a finished report") {
  vm::ExitReport report;
  report.counters.non_leaf_calls = 12;
  report.counters.data_ptr_loads_stores = 7;
  vm::EventCounters c = costmodel::count_events(report);
  CHECK(c.non_leaf_calls == 12);
  CHECK(c.data_ptr_loads_stores == 7);
}

TEST_CASE("count_events runs a program when asked") {
  tir::Program prog = parse_ok(read_fixture("leafonly.tir"));
  instrument::LowerResult lr =
      instrument::lower(prog, SchemeSet{}, 1);
  vm::Program vp = assemble_ok(lr.assembly);
  vm::EventCounters c = costmodel::count_events(vp, vm::RunOptions{});
  CHECK(c.non_leaf_calls == 1);
  CHECK(c.leaf_calls == 3);
}

TEST_CASE("count_events refuses unfinished runs") {
  vm::Program spin = assemble_ok("main:\n"
                                 "loop:\n"
                                 "  b loop\n");
  vm::RunOptions tight;
  tight.fuel = 100;
  CHECK_THROWS_AS(costmodel::count_events(spin, tight), std::runtime_error);

  vm::Program crash = assemble_ok("main:\n"
                                  "  mov x9, #0x50\n"
                                  "  ldr x0, [x9]\n"
                                  "  halt\n");
  CHECK_THROWS_AS(costmodel::count_events(crash, vm::RunOptions{}),
                  std::runtime_error);
}

TEST_CASE("event counts scale affinely with loop trips") {
  std::string source = read_fixture("arith_loop.tir");
  auto with_trips = [&](int n) {
    std::string patched = source;
    std::string needle = "%n = const 10";
    size_t pos = patched.find(needle);
    REQUIRE(pos != std::string::npos);
    patched.replace(pos, needle.size(), "%n = const " + std::to_string(n));
    instrument::LowerResult lr =
        instrument::lower(parse_ok(patched), SchemeSet{}, 1);
    vm::ExitReport r = vm::run(assemble_ok(lr.assembly));
    REQUIRE(r.status == vm::ExitReport::Status::Halted);
    return r;
  };
  vm::ExitReport r0 = with_trips(0);
  vm::ExitReport r5 = with_trips(5);
  vm::ExitReport r10 = with_trips(10);

  auto delta = [](uint64_t hi, uint64_t lo) { return hi - lo; };
  CHECK(delta(r10.counters.non_leaf_calls, r0.counters.non_leaf_calls) ==
        2 * delta(r5.counters.non_leaf_calls, r0.counters.non_leaf_calls));
  CHECK(delta(r10.counters.leaf_calls, r0.counters.leaf_calls) ==
        2 * delta(r5.counters.leaf_calls, r0.counters.leaf_calls));
  CHECK(delta(r10.counters.code_ptrs_created, r0.counters.code_ptrs_created) ==
        2 * delta(r5.counters.code_ptrs_created,
                  r0.counters.code_ptrs_created));
  CHECK(delta(r10.counters.indirect_calls, r0.counters.indirect_calls) ==
        2 * delta(r5.counters.indirect_calls, r0.counters.indirect_calls));
  CHECK(delta(r10.counters.data_ptr_loads_stores,
              r0.counters.data_ptr_loads_stores) ==
        2 * delta(r5.counters.data_ptr_loads_stores,
                  r0.counters.data_ptr_loads_stores));
  CHECK(delta(r10.instructions_executed, r0.instructions_executed) ==
        2 * delta(r5.instructions_executed, r0.instructions_executed));
  CHECK(r5.counters.leaf_calls > r0.counters.leaf_calls);
  CHECK(r5.counters.indirect_calls > r0.counters.indirect_calls);
  CHECK(r5.counters.data_ptr_loads_stores >
        r0.counters.data_ptr_loads_stores);
}

TEST_CASE("analogue rewrite emits the documented shapes") {
  std::string in = "main:\n"
                   "  mov x15, #0x1\n"
                   "  pacib lr, x15\n"
                   "  paciasp\n"
                   "  pacdza x5\n"
                   "  retaa\n";
  std::string out = costmodel::pa_analogue_rewrite(in);
  CHECK(out == "main:\n"
               "  mov x15, #0x1\n"
               "  eor lr, lr, #0x2\n"
               "  eor lr, lr, #0x3\n"
               "  eor lr, lr, #0x5\n"
               "  eor lr, lr, x15\n"
               "  eor x30, x30, #0x2\n"
               "  eor x30, x30, #0x3\n"
               "  eor x30, x30, #0x5\n"
               "  eor x30, x30, sp\n"
               "  eor x5, x5, #0x2\n"
               "  eor x5, x5, #0x3\n"
               "  eor x5, x5, #0x5\n"
               "  eor x5, x5, #0x0\n"
               "  eor x30, x30, #0x2\n"
               "  eor x30, x30, #0x3\n"
               "  eor x30, x30, #0x5\n"
               "  eor x30, x30, sp\n"
               "  ret\n");
}

TEST_CASE("combined instructions keep their plain remainder") {
  std::string out = costmodel::pa_analogue_rewrite("  blraa x13, x15\n");
  CHECK(out == "  eor x13, x13, #0x2\n"
               "  eor x13, x13, #0x3\n"
               "  eor x13, x13, #0x5\n"
               "  eor x13, x13, x15\n"
               "  blr x13\n");
  out = costmodel::pa_analogue_rewrite("  ldraa x2, [x9]\n");
  CHECK(out == "  eor x9, x9, #0x2\n"
               "  eor x9, x9, #0x3\n"
               "  eor x9, x9, #0x5\n"
               "  eor x9, x9, #0x0\n"
               "  ldr x2, [x9]\n");
}

TEST_CASE("the generic form reads one register and writes another") {
  std::string out = costmodel::pa_analogue_rewrite("  pacga x3, x9, x15\n");
  CHECK(out == "  eor x3, x9, #0x2\n"
               "  eor x3, x3, #0x3\n"
               "  eor x3, x3, #0x5\n"
               "  eor x3, x3, x15\n");
}

TEST_CASE("value preservation appends a fifth exclusive-or") {
  std::string out = costmodel::pa_analogue_rewrite("  pacda x1, x2\n", true);
  CHECK(out == "  eor x1, x1, #0x2\n"
               "  eor x1, x1, #0x3\n"
               "  eor x1, x1, #0x5\n"
               "  eor x1, x1, x2\n"
               "  eor x1, x1, x2\n");
}

TEST_CASE("labels, directives and plain code pass through") {
  std::string in = "entry:\n"
                   ".data\n"
                   "  .quad 7\n"
                   "  .marker here\n"
                   "  ; just a note\n"
                   "  add x1, x2, #3\n"
                   "\n";
  CHECK(costmodel::pa_analogue_rewrite(in) == in);
}

// The analogue keeps instrumented programs runnable: exclusive-or pairs
// cancel across sign/auth sites, so the rewritten program matches the
// baseline observably while paying a fixed, countable instruction tax.
TEST_CASE("executed instruction deltas match the static shapes") {
  tir::Program prog = parse_ok(read_fixture("arith_loop.tir"));
  SchemeSet ras{true, false, false};

  instrument::LowerResult base = instrument::lower(prog, SchemeSet{}, 1);
  instrument::LowerResult inst = instrument::lower(prog, ras, 1);
  std::string analogue = costmodel::pa_analogue_rewrite(inst.assembly);
  std::string analogue_vp = costmodel::pa_analogue_rewrite(inst.assembly, true);

  vm::ExitReport r0 = vm::run(assemble_ok(base.assembly));
  vm::ExitReport r1 = vm::run(assemble_ok(inst.assembly));
  vm::ExitReport r2 = vm::run(assemble_ok(analogue));
  vm::ExitReport r3 = vm::run(assemble_ok(analogue_vp));
  REQUIRE(r0.status == vm::ExitReport::Status::Halted);
  REQUIRE(r1.status == vm::ExitReport::Status::Halted);
  REQUIRE(r2.status == vm::ExitReport::Status::Halted);
  REQUIRE(r3.status == vm::ExitReport::Status::Halted);

  uint64_t pa_exec = r1.pa_instructions_executed;
  CHECK(pa_exec == 2 * r1.counters.non_leaf_calls);
  CHECK(pa_exec > 0);

  // Each executed site costs its modifier setup plus one PA instruction;
  // the analogue trades the PA instruction for four exclusive-ors, five
  // in the value-preserving variant.
  CHECK(r1.instructions_executed - r0.instructions_executed == 5 * pa_exec);
  CHECK(r2.instructions_executed - r0.instructions_executed == 8 * pa_exec);
  CHECK(r2.instructions_executed - r1.instructions_executed == 3 * pa_exec);
  CHECK(r3.instructions_executed - r0.instructions_executed == 9 * pa_exec);

  CHECK(r2.pa_instructions_executed == 0);
  CHECK(r3.pa_instructions_executed == 0);
  CHECK(r2.outputs == r0.outputs);
  CHECK(r3.outputs == r0.outputs);
  CHECK(r2.exit_code == r0.exit_code);
  CHECK(r2.counters == r1.counters);
  CHECK(r3.counters == r1.counters);
}

} // TEST_SUITE
