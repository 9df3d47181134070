//===-- costmodel.cpp - Overhead estimation and the PA analogue -----------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/costmodel.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

namespace partsforge::costmodel {

namespace {

struct AnalogueForm {
  std::string target;   ///< register the exclusive-ors apply to
  std::string modifier; ///< modifier register, or "" for the zero forms
  std::string tail;     ///< plain remainder of a combined instruction
};

std::string trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> operands(const std::string &rest) {
  std::vector<std::string> ops;
  std::string cur;
  for (char c : rest) {
    if (c == ',') {
      ops.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty())
    ops.push_back(cur);
  return ops;
}

std::string strip_brackets(std::string s) {
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']')
    return trim(s.substr(1, s.size() - 2));
  return s;
}

bool any_of(const std::string &m, std::initializer_list<const char *> set) {
  for (const char *c : set)
    if (m == c)
      return true;
  return false;
}

/// Classifies one instruction line. Returns false for everything that is
/// not a PA instruction.
bool classify(const std::string &mnemonic, const std::string &rest,
              AnalogueForm &form) {
  std::vector<std::string> ops = operands(rest);
  if (any_of(mnemonic, {"pacia", "pacib", "pacda", "pacdb", "autia", "autib",
                        "autda", "autdb"}) &&
      ops.size() == 2) {
    form = {ops[0], ops[1], ""};
    return true;
  }
  if (any_of(mnemonic, {"paciasp", "pacibsp", "autiasp", "autibsp"}) &&
      ops.empty()) {
    form = {"x30", "sp", ""};
    return true;
  }
  if (any_of(mnemonic, {"paciza", "pacizb", "pacdza", "pacdzb", "autiza",
                        "autizb", "autdza", "autdzb", "xpaci", "xpacd"}) &&
      ops.size() == 1) {
    form = {ops[0], "", ""};
    return true;
  }
  if (any_of(mnemonic, {"paciaz", "pacibz", "autiaz", "autibz"}) &&
      ops.empty()) {
    form = {"x30", "", ""};
    return true;
  }
  if (mnemonic == "pacga" && ops.size() == 3) {
    // The first exclusive-or moves the source into the destination.
    form = {ops[0] + "!" + ops[1], ops[2], ""};
    return true;
  }
  if (any_of(mnemonic, {"retaa", "retab"}) && ops.empty()) {
    form = {"x30", "sp", "ret"};
    return true;
  }
  if (any_of(mnemonic, {"braa", "blraa", "brab", "blrab"}) &&
      ops.size() == 2) {
    bool link = mnemonic[0] == 'b' && mnemonic[1] == 'l';
    form = {ops[0], ops[1], (link ? "blr " : "br ") + ops[0]};
    return true;
  }
  if (any_of(mnemonic, {"ldraa", "ldrab"}) && ops.size() == 2) {
    std::string base = strip_brackets(ops[1]);
    form = {base, "", "ldr " + ops[0] + ", [" + base + "]"};
    return true;
  }
  return false;
}

} // namespace

OverheadEstimate estimate_overhead(const vm::EventCounters &events,
                                   instrument::SchemeSet schemes,
                                   const CycleModel &model) {
  OverheadEstimate est;
  if (schemes.ras)
    est.ras = model.per_nonleaf_call().scaled(events.non_leaf_calls);
  if (schemes.cps)
    est.cps = model.per_pac_op().scaled(events.code_ptrs_created +
                                        events.indirect_calls);
  if (schemes.dps)
    est.dps = model.per_pac_op().scaled(events.data_ptr_loads_stores);
  est.total = est.ras + est.cps + est.dps;
  return est;
}

vm::EventCounters count_events(const vm::ExitReport &report) {
  return report.counters;
}

vm::EventCounters count_events(const vm::Program &program,
                               const vm::RunOptions &opts) {
  vm::ExitReport report = vm::run(program, opts);
  if (report.status != vm::ExitReport::Status::Halted)
    throw std::runtime_error(std::string("event counting run did not halt: ") +
                             vm::status_name(report.status));
  return report.counters;
}

std::string pa_analogue_rewrite(const std::string &assembly,
                                bool value_preserving) {
  std::istringstream in(assembly);
  std::string out;
  std::string raw;
  while (std::getline(in, raw)) {
    std::string body = raw;
    size_t cut = body.find(';');
    if (cut != std::string::npos)
      body = body.substr(0, cut);
    size_t indent_end = body.find_first_not_of(" \t");
    std::string line = trim(body);
    bool handled = false;
    if (!line.empty() && line.back() != ':' && line[0] != '.') {
      size_t sp = line.find_first_of(" \t");
      std::string mnemonic = sp == std::string::npos ? line : line.substr(0, sp);
      std::string rest = sp == std::string::npos ? "" : trim(line.substr(sp));
      AnalogueForm form;
      if (classify(mnemonic, rest, form)) {
        std::string indent =
            indent_end == std::string::npos ? "  " : raw.substr(0, indent_end);
        std::string first_src = form.target;
        std::string dst = form.target;
        size_t alias = form.target.find('!');
        if (alias != std::string::npos) {
          dst = form.target.substr(0, alias);
          first_src = form.target.substr(alias + 1);
        }
        std::string mod =
            form.modifier.empty() ? "#0x0" : form.modifier;
        out += indent + "eor " + dst + ", " + first_src + ", #0x2\n";
        out += indent + "eor " + dst + ", " + dst + ", #0x3\n";
        out += indent + "eor " + dst + ", " + dst + ", #0x5\n";
        out += indent + "eor " + dst + ", " + dst + ", " + mod + "\n";
        if (value_preserving)
          out += indent + "eor " + dst + ", " + dst + ", " + mod + "\n";
        if (!form.tail.empty())
          out += indent + form.tail + "\n";
        handled = true;
      }
    }
    if (!handled)
      out += raw + "\n";
  }
  return out;
}

} // namespace partsforge::costmodel
