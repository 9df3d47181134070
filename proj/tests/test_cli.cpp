//===- test_cli.cpp - End-to-end command line tests -----------------------===//
//
// Part of the partsforge project, under the Apache License v2.0.
// See LICENSE for license information.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Drives the installed binary as a subprocess and checks exit codes, the
// text formats, and that every JSON report validates against its schema
// in docs/schemas. The schema checker below covers the subset of JSON
// Schema those files use: type, properties, required, items, enum,
// minItems and maxItems.
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("partsforge-cli-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Runs the tool with `args`, optionally under extra environment
/// assignments ("NAME=value "), capturing both streams.
CliResult run_cli(const std::string &args, const std::string &env = "") {
  static int serial = 0;
  fs::path out = work_dir() / ("out." + std::to_string(serial));
  fs::path err = work_dir() / ("err." + std::to_string(serial));
  ++serial;
  std::string cmd = env + std::string(PARTSFORGE_CLI_PATH) + " " + args +
                    " >" + out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string fixture(const std::string &name) {
  return (fs::path(PARTSFORGE_FIXTURE_DIR) / name).string();
}

json load_schema(const std::string &name) {
  return json::parse(slurp(fs::path(PARTSFORGE_SCHEMA_DIR) / name));
}

bool type_matches(const json &doc, const std::string &type) {
  if (type == "object")
    return doc.is_object();
  if (type == "array")
    return doc.is_array();
  if (type == "string")
    return doc.is_string();
  if (type == "integer")
    return doc.is_number_integer() || doc.is_number_unsigned();
  if (type == "number")
    return doc.is_number();
  if (type == "boolean")
    return doc.is_boolean();
  if (type == "null")
    return doc.is_null();
  return false;
}

void validate(const json &schema, const json &doc, const std::string &where,
              std::vector<std::string> &errors) {
  if (schema.contains("type") &&
      !type_matches(doc, schema["type"].get<std::string>()))
    errors.push_back(where + ": expected " +
                     schema["type"].get<std::string>());
  if (schema.contains("enum")) {
    bool hit = false;
    for (const auto &v : schema["enum"])
      hit = hit || v == doc;
    if (!hit)
      errors.push_back(where + ": value not in enum");
  }
  if (schema.contains("required") && doc.is_object())
    for (const auto &key : schema["required"])
      if (!doc.contains(key.get<std::string>()))
        errors.push_back(where + ": missing " + key.get<std::string>());
  if (schema.contains("properties") && doc.is_object())
    for (const auto &[key, sub] : schema["properties"].items())
      if (doc.contains(key))
        validate(sub, doc[key], where + "." + key, errors);
  if (doc.is_array()) {
    if (schema.contains("minItems") &&
        doc.size() < schema["minItems"].get<size_t>())
      errors.push_back(where + ": too few items");
    if (schema.contains("maxItems") &&
        doc.size() > schema["maxItems"].get<size_t>())
      errors.push_back(where + ": too many items");
    if (schema.contains("items"))
      for (size_t i = 0; i < doc.size(); ++i)
        validate(schema["items"], doc[i], where + "[" + std::to_string(i) +
                                              "]",
                 errors);
  }
}

void check_schema(const std::string &schema_name, const json &doc) {
  std::vector<std::string> errors;
  validate(load_schema(schema_name), doc, "$", errors);
  for (const auto &e : errors)
    FAIL_CHECK(schema_name << " violation: " << e);
}

bool is_hex(const std::string &s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (!std::isxdigit(static_cast<unsigned char>(c)))
      return false;
  return true;
}

std::vector<std::string> split_ws(const std::string &line) {
  std::istringstream in(line);
  std::vector<std::string> fields;
  std::string f;
  while (in >> f)
    fields.push_back(f);
  return fields;
}

std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l))
    lines.push_back(l);
  return lines;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("check accepts a valid program") {
  CliResult r = run_cli("check " + fixture("arith_loop.tir"));
  CHECK(r.code == 0);
  CHECK(r.out.find(": ok (") != std::string::npos);
  CHECK(r.out.find("functions") != std::string::npos);
  CHECK(r.err.empty());
}

TEST_CASE("check rejects a broken program with diagnostics") {
  fs::path bad = work_dir() / "bad.tir";
  spit(bad, "fn main() : i64 {\n"
            "entry:\n"
            "  %x = add %y, %z\n"
            "  ret %x\n"
            "}\n");
  CliResult r = run_cli("check " + bad.string());
  CHECK(r.code == 1);
  CHECK(r.out.find(bad.string()) != std::string::npos);
  CHECK(r.out.find(":3:") != std::string::npos);
}

TEST_CASE("usage problems exit with code two") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("check").code == 2);
  CHECK(run_cli("frobnicate x").code == 2);
  CHECK(run_cli("run " + fixture("hello.tir") + " --report yaml").code == 2);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("run nonexistent.tir").code == 2);
}

TEST_CASE("guess prints the closed formulas") {
  CliResult r = run_cli("guess --pac-bits 16");
  CHECK(r.code == 0);
  CHECK(r.out == "45425\n");
  CHECK(run_cli("guess --pac-bits 24").out == "11629079\n");
  CHECK(run_cli("guess --pac-bits 16 --p 0.9").out == "150901\n");
  CHECK(run_cli("guess --pac-bits 16 --policy sibling").out == "32768\n");
  CHECK(run_cli("guess --pac-bits 3 --policy sibling").out == "4\n");
}

TEST_CASE("guess simulation json matches its schema") {
  CliResult r = run_cli(
      "guess --pac-bits 8 --simulate --trials 500 --seed 9 --report json");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  check_schema("guess_report.schema.json", j);
  CHECK(j["pac_bits"] == 8);
  CHECK(j["policy"] == "restart");
  CHECK(j["trials"] == 500);
  CHECK(j["successes"] == 500);
  CHECK(j["median_formula"] == 177);
  double mean = j["mean_attempts"].get<double>();
  CHECK(mean > 200.0);
  CHECK(mean < 320.0);
}

TEST_CASE("run prints outputs on stdout and status on stderr") {
  fs::path prog = work_dir() / "seven.tvm";
  spit(prog, "main:\n"
             "  mov x1, #7\n"
             "  out x1\n"
             "  mov x0, #0\n"
             "  halt\n");
  CliResult r = run_cli("run " + prog.string());
  CHECK(r.code == 0);
  CHECK(r.out == "7\n");
  CHECK(r.err.find("status halted exit 0") != std::string::npos);
  CHECK(r.err.find("instructions") != std::string::npos);
}

TEST_CASE("a faulting run exits with code one") {
  fs::path prog = work_dir() / "crash.tvm";
  spit(prog, "main:\n"
             "  mov x9, #0x50\n"
             "  ldr x0, [x9]\n"
             "  halt\n");
  CliResult r = run_cli("run " + prog.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("status faulted") != std::string::npos);
  CHECK(r.err.find("translation-fault") != std::string::npos);
}

TEST_CASE("run json matches its schema") {
  CliResult r = run_cli("run " + fixture("callback.tir") +
                        " --schemes ras,cps,dps --seed 3 --report json");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  check_schema("run_report.schema.json", j);
  CHECK(j["schemes"] == "ras+cps+dps");
  CHECK(j["seed"] == 3);
  CHECK(j["status"] == "halted");
  CHECK(j["outputs"] == json::array({42}));
  CHECK(j["pa_instructions"].get<uint64_t>() > 0);
}

TEST_CASE("faulting run json carries the fault object") {
  fs::path prog = work_dir() / "crash2.tvm";
  spit(prog, "main:\n"
             "  mov x9, #0x50\n"
             "  ldr x0, [x9]\n"
             "  halt\n");
  CliResult r = run_cli("run " + prog.string() + " --report json");
  CHECK(r.code == 1);
  json j = json::parse(r.out);
  check_schema("run_report.schema.json", j);
  CHECK(j["status"] == "faulted");
  REQUIRE(j.contains("fault"));
  CHECK(j["fault"]["kind"] == "translation-fault");
  CHECK(j["fault"]["addr"] == 0x50);
  CHECK(j["fault"]["auth_failure"] == false);
}

TEST_CASE("instrument writes assembly plus manifest and the result runs") {
  fs::path out = work_dir() / "callback.tvm";
  fs::path manifest = work_dir() / "callback.manifest.json";
  CliResult r = run_cli("instrument " + fixture("callback.tir") + " -o " +
                        out.string() + " --manifest " + manifest.string() +
                        " --schemes ras,cps,dps --seed 1");
  CHECK(r.code == 0);
  REQUIRE(fs::exists(out));
  REQUIRE(fs::exists(manifest));

  std::string assembly = slurp(out);
  CHECK(assembly.find("pacib") != std::string::npos);
  CHECK(assembly.find(".site") != std::string::npos);

  json m = json::parse(slurp(manifest));
  CHECK(m.contains("sites"));
  CHECK(m["schemes"] == "ras+cps+dps");

  CliResult rr = run_cli("run " + out.string() + " --seed 1");
  CHECK(rr.code == 0);
  CHECK(rr.out == "42\n");
}

TEST_CASE("instrument without an output path prints the assembly") {
  CliResult r =
      run_cli("instrument " + fixture("leafonly.tir") + " --schemes none");
  CHECK(r.code == 0);
  CHECK(r.out.find("main:") != std::string::npos);
  CHECK(r.out.find(".site") != std::string::npos);
  CHECK(r.out.find("halt") != std::string::npos);
}

TEST_CASE("attack json matches its schema") {
  CliResult r = run_cli("attack " + fixture("ret_forge.tir") +
                        " --scenario S1 --schemes ras --seed 0"
                        " --expect detected --report json");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  check_schema("attack_report.schema.json", j);
  CHECK(j["scenario"] == "S1");
  CHECK(j["verdict"] == "DETECTED");
  CHECK(j["expected"] == "DETECTED");
  CHECK(j["evidence"]["kind"] == "fault");
  CHECK(j["evidence"]["auth_failure"] == true);
  CHECK(j["exit"]["status"] == "faulted");
  CHECK_FALSE(j["log"].empty());
}

TEST_CASE("attack against the unprotected program succeeds") {
  CliResult r = run_cli("attack " + fixture("ret_forge.tir") +
                        " --scenario S1 --schemes none --seed 0");
  CHECK(r.code == 0);
  CHECK(r.out.find("verdict: SUCCEEDED") != std::string::npos);
  CHECK(r.out.find("attack_win") != std::string::npos);
}

TEST_CASE("attack with a contrary expectation exits with code one") {
  CliResult r = run_cli("attack " + fixture("ret_forge.tir") +
                        " --scenario S1 --schemes none --seed 0"
                        " --expect detected");
  CHECK(r.code == 1);
  CHECK(r.out.find("verdict: SUCCEEDED (expected DETECTED)") !=
        std::string::npos);
}

TEST_CASE("attack rejects unknown scenarios") {
  CliResult r = run_cli("attack " + fixture("ret_forge.tir") +
                        " --scenario S99 --schemes ras");
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown scenario") != std::string::npos);
}

TEST_CASE("bench prices recorded counts against the model") {
  CliResult r = run_cli("bench --from-counts " +
                        fixture("table4_counts.json") +
                        " --schemes ras --report json");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  check_schema("bench_report.schema.json", j);
  CHECK(j["model"]["per_nonleaf_call"] == json::array({12, 16}));
  bool found = false;
  for (const auto &row : j["rows"]) {
    if (row["name"] != "numeric_sort")
      continue;
    found = true;
    CHECK(row["schemes"] == "ras");
    CHECK(row["overhead_cycles"]["ras"] == json::array({21624, 28832}));
    CHECK(row["overhead_cycles"]["total"] == json::array({21624, 28832}));
    CHECK(row["overhead_cycles"]["cps"] == json::array({0, 0}));
  }
  CHECK(found);
  CHECK(j["rows"].size() == 10);
}

TEST_CASE("bench renders a table by default") {
  CliResult r = run_cli("bench --from-counts " +
                        fixture("table4_counts.json") + " --schemes ras");
  CHECK(r.code == 0);
  CHECK(r.out.find("program") != std::string::npos);
  CHECK(r.out.find("cycles lo") != std::string::npos);
  CHECK(r.out.find("numeric_sort") != std::string::npos);
  CHECK(r.out.find("21624") != std::string::npos);
  CHECK(r.out.find("28832") != std::string::npos);
}

TEST_CASE("bench measures a program end to end") {
  CliResult r = run_cli("bench " + fixture("leafonly.tir") +
                        " --schemes ras --seed 1 --report json");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  check_schema("bench_report.schema.json", j);
  REQUIRE(j["rows"].size() == 1);
  const json &row = j["rows"][0];
  CHECK(row["baseline_instructions"].get<uint64_t>() > 0);
  CHECK(row["instrumented_instructions"].get<uint64_t>() >
        row["baseline_instructions"].get<uint64_t>());
  CHECK(row["overhead_ratio"][0].get<double>() >= 1.0);
  CHECK(row["overhead_ratio"][1].get<double>() >=
        row["overhead_ratio"][0].get<double>());
}

TEST_CASE("macvec prints well-formed deterministic vectors") {
  CliResult r = run_cli("macvec --seed 4");
  CHECK(r.code == 0);
  std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() == 8);
  for (const std::string &line : lines) {
    std::vector<std::string> f = split_ws(line);
    REQUIRE(f.size() == 5);
    for (int i = 0; i < 4; ++i) {
      CHECK(f[i].size() == 16);
      CHECK(is_hex(f[i]));
    }
    // 24 PAC bits at the default address width: six hex digits.
    CHECK(f[4].size() == 6);
    CHECK(is_hex(f[4]));
  }
  CHECK(run_cli("macvec --seed 4").out == r.out);
  CHECK(run_cli("macvec --seed 5").out != r.out);
  CHECK(lines_of(run_cli("macvec --seed 4 --count 3").out).size() == 3);

  CliResult narrow = run_cli("macvec --seed 4 --va-bits 47");
  for (const std::string &line : lines_of(narrow.out))
    CHECK(split_ws(line)[4].size() == 4);
}

TEST_CASE("the seed environment variable feeds every subcommand") {
  CliResult by_flag = run_cli("macvec --seed 11");
  CliResult by_env = run_cli("macvec", "PARTSFORGE_SEED=11 ");
  CHECK(by_env.code == 0);
  CHECK(by_env.out == by_flag.out);

  CliResult overridden = run_cli("macvec --seed 11", "PARTSFORGE_SEED=99 ");
  CHECK(overridden.out == by_flag.out);
}

TEST_CASE("a malformed seed environment variable is refused") {
  CliResult r = run_cli("guess --pac-bits 16", "PARTSFORGE_SEED=banana ");
  CHECK(r.code == 2);
  CHECK(r.err.find("invalid seed") != std::string::npos);
}

TEST_CASE("runs are reproducible for a fixed seed") {
  std::string cmd = "run " + fixture("fnptr_global.tir") +
                    " --schemes ras,cps,dps --seed 3 --report json";
  CliResult a = run_cli(cmd);
  CliResult b = run_cli(cmd);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

} // TEST_SUITE
