//===-- attack.cpp - Scripted adversary execution -------------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/attack.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace partsforge::attack {

namespace {

std::string hex(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string hex_bytes(const std::vector<uint8_t> &bytes) {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xF];
  }
  return out;
}

const char *action_name(Action::Kind k) {
  switch (k) {
  case Action::Kind::Read:
    return "read";
  case Action::Kind::Write:
    return "write";
  case Action::Kind::Record:
    return "record";
  case Action::Kind::Replay:
    return "replay";
  }
  return "?";
}

void validate(const AdversaryScript &script) {
  std::set<std::string> recorded;
  for (const Trigger &t : script.triggers)
    for (const Action &a : t.actions)
      if (a.kind == Action::Kind::Record) {
        if (a.tag.empty())
          throw std::invalid_argument("record action needs a tag");
        recorded.insert(a.tag);
      }
  for (const Trigger &t : script.triggers) {
    if (t.actions.empty())
      throw std::invalid_argument("trigger without actions");
    for (const Action &a : t.actions) {
      switch (a.kind) {
      case Action::Kind::Read:
      case Action::Kind::Record:
        if (a.len == 0)
          throw std::invalid_argument("zero-length read or record");
        break;
      case Action::Kind::Write:
        if (a.bytes.empty())
          throw std::invalid_argument("write action with empty payload");
        break;
      case Action::Kind::Replay:
        if (!recorded.count(a.tag))
          throw std::invalid_argument("replay of unrecorded tag '" + a.tag +
                                      "'");
        break;
      }
    }
  }
}

} // namespace

Action Action::read(MemRef where, uint64_t len) {
  Action a;
  a.kind = Kind::Read;
  a.where = where;
  a.len = len;
  return a;
}

Action Action::write(MemRef where, std::vector<uint8_t> bytes) {
  Action a;
  a.kind = Kind::Write;
  a.where = where;
  a.bytes = std::move(bytes);
  return a;
}

Action Action::write_u64(MemRef where, uint64_t value) {
  std::vector<uint8_t> bytes(8);
  for (int i = 0; i < 8; ++i)
    bytes[static_cast<size_t>(i)] = static_cast<uint8_t>(value >> (8 * i));
  return write(where, std::move(bytes));
}

Action Action::record(std::string tag, MemRef where, uint64_t len) {
  Action a;
  a.kind = Kind::Record;
  a.where = where;
  a.len = len;
  a.tag = std::move(tag);
  return a;
}

Action Action::replay(std::string tag, MemRef where) {
  Action a;
  a.kind = Kind::Replay;
  a.where = where;
  a.tag = std::move(tag);
  return a;
}

const char *verdict_name(Verdict v) {
  switch (v) {
  case Verdict::Detected:
    return "DETECTED";
  case Verdict::Succeeded:
    return "SUCCEEDED";
  case Verdict::Benign:
    return "BENIGN";
  }
  return "?";
}

std::optional<Verdict> verdict_from_string(const std::string &s) {
  std::string low;
  for (char c : s)
    low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (low == "detected")
    return Verdict::Detected;
  if (low == "succeeded")
    return Verdict::Succeeded;
  if (low == "benign")
    return Verdict::Benign;
  return std::nullopt;
}

AttackOutcome execute_attack(const vm::Program &program,
                             const AdversaryScript &script,
                             const vm::RunOptions &opts) {
  validate(script);

  vm::Machine m(program, opts);
  AttackOutcome out;
  std::map<std::string, std::vector<uint8_t>> tape;
  std::vector<uint64_t> arrivals(script.triggers.size(), 0);
  std::vector<bool> icount_fired(script.triggers.size(), false);

  auto resolve = [&](const MemRef &ref) {
    return ref.base == MemRef::Base::Absolute
               ? static_cast<uint64_t>(ref.value)
               : m.sp() + static_cast<uint64_t>(ref.value);
  };

  auto fire = [&](const Trigger &t) {
    for (const Action &a : t.actions) {
      uint64_t addr = resolve(a.where);
      std::string line = std::string(action_name(a.kind)) + " " + hex(addr);
      switch (a.kind) {
      case Action::Kind::Read: {
        std::vector<uint8_t> buf(a.len);
        bool ok = m.adversary_read(addr, buf.data(), a.len);
        line += ok ? " = " + hex_bytes(buf) : " refused";
        break;
      }
      case Action::Kind::Write: {
        bool ok = m.adversary_write(addr, a.bytes.data(), a.bytes.size());
        line += " <- " + hex_bytes(a.bytes) + (ok ? "" : " refused");
        break;
      }
      case Action::Kind::Record: {
        std::vector<uint8_t> buf(a.len);
        bool ok = m.adversary_read(addr, buf.data(), a.len);
        if (ok) {
          line += " '" + a.tag + "' = " + hex_bytes(buf);
          tape[a.tag] = std::move(buf);
        } else {
          line += " refused";
        }
        break;
      }
      case Action::Kind::Replay: {
        auto it = tape.find(a.tag);
        if (it == tape.end()) {
          line += " '" + a.tag + "' empty, skipped";
          break;
        }
        bool ok = m.adversary_write(addr, it->second.data(),
                                    it->second.size());
        line += " <- '" + a.tag + "' " + hex_bytes(it->second) +
                (ok ? "" : " refused");
        break;
      }
      }
      out.log.push_back(std::move(line));
    }
  };

  while (!m.done()) {
    for (size_t i = 0; i < script.triggers.size(); ++i) {
      const Trigger &t = script.triggers[i];
      bool match = false;
      if (t.on == Trigger::On::Pc) {
        if (m.pc() == t.value) {
          ++arrivals[i];
          match = t.hit == 0 || arrivals[i] == t.hit;
        }
      } else if (!icount_fired[i] && m.instructions_executed() == t.value) {
        icount_fired[i] = true;
        match = true;
      }
      if (match) {
        out.log.push_back("trigger at " + hex(m.pc()) + " after " +
                          std::to_string(m.instructions_executed()) +
                          " instructions");
        fire(t);
      }
    }
    m.step();
  }

  out.report = m.take_report();
  bool marker_hit =
      !script.success_marker.empty() &&
      std::find(out.report.markers_reached.begin(),
                out.report.markers_reached.end(),
                script.success_marker) != out.report.markers_reached.end();
  if (marker_hit) {
    out.verdict = Verdict::Succeeded;
    auto it = program.markers.find(script.success_marker);
    if (it != program.markers.end())
      out.marker_pc = it->second;
  } else if (out.report.fault && out.report.auth_failure_fault) {
    out.verdict = Verdict::Detected;
  } else {
    out.verdict = Verdict::Benign;
  }
  return out;
}

AttackOutcome execute_attack(const vm::Program &program,
                             const AdversaryScript &script, uint64_t seed) {
  vm::RunOptions opts;
  opts.key_seed = seed;
  return execute_attack(program, script, opts);
}

} // namespace partsforge::attack
