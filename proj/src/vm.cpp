//===-- vm.cpp - Machine execution ----------------------------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/vm.hpp"

namespace partsforge::vm {

void EventCounters::bump(EventKind k) {
  switch (k) {
  case EventKind::NonLeafEntry: ++non_leaf_calls; break;
  case EventKind::LeafEntry: ++leaf_calls; break;
  case EventKind::CpCreate: ++code_ptrs_created; break;
  case EventKind::IndirectCall: ++indirect_calls; break;
  case EventKind::DpLoad:
  case EventKind::DpStore: ++data_ptr_loads_stores; break;
  }
}

const char *fault_kind_name(FaultRecord::Kind k) {
  switch (k) {
  case FaultRecord::Kind::Translation: return "translation-fault";
  case FaultRecord::Kind::Permission: return "permission-fault";
  case FaultRecord::Kind::Halt: return "halt";
  }
  return "?";
}

const char *status_name(ExitReport::Status s) {
  switch (s) {
  case ExitReport::Status::Halted: return "halted";
  case ExitReport::Status::Faulted: return "faulted";
  case ExitReport::Status::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

Machine::Machine(const Program &program, const RunOptions &opts)
    : prog_(program), cfg_(opts.cfg), keys_(KeySet::generate(opts.key_seed)),
      pa_enabled_(opts.pa_enabled), fuel_(opts.fuel) {
  if (!pa_enabled_ && prog_.has_combined_pa)
    throw LoadError("program uses combined PA instructions; cannot run with "
                    "PA disabled");

  map_region(kCodeBase, 4 * prog_.code.size(), false, true);
  if (!prog_.data.empty()) {
    map_region(kDataBase, prog_.data.size(), true, false);
    for (size_t i = 0; i < prog_.data.size(); ++i)
      page_at(kDataBase + i)->bytes[(kDataBase + i) % kPageSize] =
          prog_.data[i];
  }
  map_region(kStackTop - kStackSize, kStackSize, true, false);

  std::string entry = opts.entry;
  if (entry.empty())
    entry = prog_.symbols.count("__start") ? "__start" : "main";
  auto addr = prog_.symbol(entry);
  if (!addr)
    throw LoadError("entry symbol '" + entry + "' not found");
  if (*addr < kCodeBase || *addr >= kCodeBase + 4 * prog_.code.size())
    throw LoadError("entry symbol '" + entry + "' is not code");
  pc_ = *addr;
  regs_[kRegSP] = kStackTop;
  regs_[kRegLR] = kHaltAddr;
}

void Machine::map_region(uint64_t base, uint64_t size, bool writable,
                         bool executable) {
  if (size == 0)
    return;
  uint64_t first = base / kPageSize;
  uint64_t last = (base + size - 1) / kPageSize;
  for (uint64_t p = first; p <= last; ++p) {
    auto &page = pages_[p];
    page.writable = writable;
    page.executable = executable;
  }
}

Machine::PageData *Machine::page_at(uint64_t addr) {
  auto it = pages_.find(addr / kPageSize);
  return it == pages_.end() ? nullptr : &it->second;
}

const Machine::PageData *Machine::page_at(uint64_t addr) const {
  auto it = pages_.find(addr / kPageSize);
  return it == pages_.end() ? nullptr : &it->second;
}

bool Machine::translate(uint64_t addr, uint64_t &effective) const {
  effective = addr;
  if (cfg_.tagging)
    effective &= ~0xFF00'0000'0000'0000ULL; // top-byte ignore
  return (effective & ~cfg_.addr_mask()) == 0;
}

bool Machine::mem_read64(uint64_t addr, uint64_t &value, FaultRecord &fault) {
  value = 0;
  for (int i = 0; i < 8; ++i) {
    uint64_t byte_addr = addr + static_cast<uint64_t>(i);
    uint64_t eff;
    if (!translate(byte_addr, eff)) {
      fault = {FaultRecord::Kind::Translation, pc_, byte_addr, "read"};
      return false;
    }
    const PageData *page = page_at(eff);
    if (!page) {
      fault = {FaultRecord::Kind::Translation, pc_, byte_addr, "read"};
      return false;
    }
    value |= static_cast<uint64_t>(page->bytes[eff % kPageSize]) << (8 * i);
  }
  return true;
}

bool Machine::mem_write64(uint64_t addr, uint64_t value, FaultRecord &fault) {
  for (int i = 0; i < 8; ++i) {
    uint64_t byte_addr = addr + static_cast<uint64_t>(i);
    uint64_t eff;
    if (!translate(byte_addr, eff)) {
      fault = {FaultRecord::Kind::Translation, pc_, byte_addr, "write"};
      return false;
    }
    PageData *page = page_at(eff);
    if (!page) {
      fault = {FaultRecord::Kind::Translation, pc_, byte_addr, "write"};
      return false;
    }
    if (!page->writable) {
      fault = {FaultRecord::Kind::Permission, pc_, byte_addr, "write"};
      return false;
    }
    page->bytes[eff % kPageSize] = static_cast<uint8_t>(value >> (8 * i));
  }
  return true;
}

void Machine::finish_halt() {
  done_ = true;
  report_.status = ExitReport::Status::Halted;
  report_.exit_code = regs_[0];
}

void Machine::finish_fault(FaultRecord fault) {
  done_ = true;
  report_.status = ExitReport::Status::Faulted;
  report_.auth_failure_fault = is_auth_failure_coded(fault.addr, cfg_);
  report_.fault = std::move(fault);
}

void Machine::branch_to(uint64_t target) {
  if (target == kHaltAddr) {
    finish_halt();
    return;
  }
  pc_ = target;
}

uint64_t Machine::do_auth(uint64_t value, uint64_t modifier, KeyId key) {
  return authenticate(value, modifier, key, keys_[key], cfg_).value;
}

void Machine::step() {
  if (done_)
    return;
  if (executed_ >= fuel_) {
    done_ = true;
    report_.status = ExitReport::Status::FuelExhausted;
    return;
  }

  // Fetch.
  uint64_t eff;
  if (!translate(pc_, eff) || eff % 4 != 0) {
    finish_fault({FaultRecord::Kind::Translation, pc_, pc_, "fetch"});
    return;
  }
  const PageData *page = page_at(eff);
  if (!page) {
    finish_fault({FaultRecord::Kind::Translation, pc_, pc_, "fetch"});
    return;
  }
  if (!page->executable) {
    finish_fault({FaultRecord::Kind::Permission, pc_, pc_, "fetch"});
    return;
  }
  size_t index = (eff - kCodeBase) / 4;
  if (index >= prog_.code.size()) {
    finish_fault({FaultRecord::Kind::Translation, pc_, pc_, "fetch"});
    return;
  }

  for (const auto &[name, addr] : prog_.markers) {
    if (addr == pc_ && !marker_seen_[name]) {
      marker_seen_[name] = true;
      report_.markers_reached.push_back(name);
    }
  }
  if (auto it = prog_.sites.find(pc_); it != prog_.sites.end())
    report_.counters.bump(it->second);

  ++executed_;
  execute(prog_.code[index]);
}

void Machine::execute(const Instr &ins) {
  auto R = [&](int r) { return regs_[static_cast<size_t>(r)]; };
  auto W = [&](int r, uint64_t v) { regs_[static_cast<size_t>(r)] = v; };
  uint64_t next = pc_ + 4;

  switch (ins.op) {
  case Op::Pac:
  case Op::Aut:
  case Op::Pacga:
  case Op::Xpaci:
  case Op::Xpacd:
  case Op::Retaa:
  case Op::Retab:
  case Op::Braa:
  case Op::Brab:
  case Op::Blraa:
  case Op::Blrab:
  case Op::Ldraa:
  case Op::Ldrab:
    ++report_.pa_instructions_executed;
    break;
  default:
    break;
  }

  switch (ins.op) {
  case Op::Mov: W(ins.rd, R(ins.rn)); break;
  case Op::MovImm:
  case Op::MovSym: W(ins.rd, ins.imm); break;
  case Op::Movk: {
    int shift = ins.rm;
    uint64_t mask = 0xFFFFULL << shift;
    W(ins.rd, (R(ins.rd) & ~mask) | (ins.imm << shift));
    break;
  }
  case Op::Add: W(ins.rd, R(ins.rn) + R(ins.rm)); break;
  case Op::AddImm: W(ins.rd, R(ins.rn) + ins.imm); break;
  case Op::Sub: W(ins.rd, R(ins.rn) - R(ins.rm)); break;
  case Op::SubImm: W(ins.rd, R(ins.rn) - ins.imm); break;
  case Op::Mul: W(ins.rd, R(ins.rn) * R(ins.rm)); break;
  case Op::MulImm: W(ins.rd, R(ins.rn) * ins.imm); break;
  case Op::Eor: W(ins.rd, R(ins.rn) ^ R(ins.rm)); break;
  case Op::EorImm: W(ins.rd, R(ins.rn) ^ ins.imm); break;
  case Op::Cmp:
    cmp_lhs_ = static_cast<int64_t>(R(ins.rn));
    cmp_rhs_ = static_cast<int64_t>(R(ins.rm));
    break;
  case Op::CmpImm:
    cmp_lhs_ = static_cast<int64_t>(R(ins.rn));
    cmp_rhs_ = static_cast<int64_t>(ins.imm);
    break;
  case Op::B:
    branch_to(ins.imm);
    return;
  case Op::Bcond: {
    bool take = false;
    switch (ins.cond) {
    case Cond::Eq: take = cmp_lhs_ == cmp_rhs_; break;
    case Cond::Ne: take = cmp_lhs_ != cmp_rhs_; break;
    case Cond::Lt: take = cmp_lhs_ < cmp_rhs_; break;
    case Cond::Ge: take = cmp_lhs_ >= cmp_rhs_; break;
    }
    if (take) {
      branch_to(ins.imm);
      return;
    }
    break;
  }
  case Op::Bl:
    W(kRegLR, next);
    branch_to(ins.imm);
    return;
  case Op::Blr:
    W(kRegLR, next);
    branch_to(R(ins.rn));
    return;
  case Op::Br:
    branch_to(R(ins.rn));
    return;
  case Op::Ret:
    branch_to(R(kRegLR));
    return;
  case Op::Ldr: {
    uint64_t value;
    FaultRecord fault;
    if (!mem_read64(R(ins.rn) + ins.imm, value, fault)) {
      finish_fault(fault);
      return;
    }
    W(ins.rd, value);
    break;
  }
  case Op::Str: {
    FaultRecord fault;
    if (!mem_write64(R(ins.rn) + ins.imm, R(ins.rd), fault)) {
      finish_fault(fault);
      return;
    }
    break;
  }
  case Op::Ldp: {
    uint64_t base = R(ins.rn) + ins.imm;
    uint64_t v1, v2;
    FaultRecord fault;
    if (!mem_read64(base, v1, fault) || !mem_read64(base + 8, v2, fault)) {
      finish_fault(fault);
      return;
    }
    W(ins.rd, v1);
    W(ins.rm, v2);
    break;
  }
  case Op::Stp: {
    uint64_t base = R(ins.rn) + ins.imm;
    FaultRecord fault;
    if (!mem_write64(base, R(ins.rd), fault) ||
        !mem_write64(base + 8, R(ins.rm), fault)) {
      finish_fault(fault);
      return;
    }
    break;
  }
  case Op::Out:
    report_.outputs.push_back(R(ins.rn));
    break;
  case Op::Halt:
    finish_halt();
    return;
  case Op::Nop:
    break;
  case Op::Pac: {
    if (!pa_enabled_)
      break;
    uint64_t value = R(ins.rd);
    uint64_t mod = ins.zero_mod ? 0 : R(ins.rn);
    if (cfg_.is_canonical(value)) {
      W(ins.rd, sign(value, mod, keys_[ins.key], cfg_));
    } else {
      // Signing an already-decorated pointer produces an invalid PAC: sign
      // the stripped value, then flip the top PAC bit.
      uint64_t s = sign(strip(value, cfg_), mod, keys_[ins.key], cfg_);
      W(ins.rd, s ^ (uint64_t{1} << (cfg_.pac_shift() + cfg_.pac_bits() - 1)));
    }
    break;
  }
  case Op::Aut: {
    if (!pa_enabled_)
      break;
    uint64_t mod = ins.zero_mod ? 0 : R(ins.rn);
    W(ins.rd, do_auth(R(ins.rd), mod, ins.key));
    break;
  }
  case Op::Pacga:
    W(ins.rd, generic_mac(R(ins.rn), R(ins.rm), keys_[KeyId::GA]));
    break;
  case Op::Xpaci:
  case Op::Xpacd:
    if (pa_enabled_)
      W(ins.rd, strip(R(ins.rd), cfg_));
    break;
  case Op::Retaa:
  case Op::Retab:
    branch_to(do_auth(R(kRegLR), R(kRegSP),
                      ins.op == Op::Retaa ? KeyId::IA : KeyId::IB));
    return;
  case Op::Braa:
  case Op::Brab:
    branch_to(do_auth(R(ins.rd), R(ins.rn),
                      ins.op == Op::Braa ? KeyId::IA : KeyId::IB));
    return;
  case Op::Blraa:
  case Op::Blrab: {
    uint64_t target = do_auth(R(ins.rd), R(ins.rn),
                              ins.op == Op::Blraa ? KeyId::IA : KeyId::IB);
    W(kRegLR, next);
    branch_to(target);
    return;
  }
  case Op::Ldraa:
  case Op::Ldrab: {
    uint64_t addr = do_auth(R(ins.rn), 0,
                            ins.op == Op::Ldraa ? KeyId::DA : KeyId::DB);
    uint64_t value;
    FaultRecord fault;
    if (!mem_read64(addr, value, fault)) {
      finish_fault(fault);
      return;
    }
    W(ins.rd, value);
    break;
  }
  }

  if (!done_)
    pc_ = next;
}

void Machine::run() {
  while (!done_)
    step();
}

bool Machine::adversary_read(uint64_t addr, void *out, uint64_t len) const {
  auto *dst = static_cast<uint8_t *>(out);
  for (uint64_t i = 0; i < len; ++i) {
    uint64_t eff;
    if (!translate(addr + i, eff))
      return false;
    const PageData *page = page_at(eff);
    if (!page)
      return false;
    dst[i] = page->bytes[eff % kPageSize];
  }
  return true;
}

bool Machine::adversary_write(uint64_t addr, const void *src, uint64_t len) {
  // Two passes so a refused write leaves memory untouched.
  for (uint64_t i = 0; i < len; ++i) {
    uint64_t eff;
    if (!translate(addr + i, eff))
      return false;
    const PageData *page = page_at(eff);
    if (!page || page->executable)
      return false;
  }
  const auto *bytes = static_cast<const uint8_t *>(src);
  for (uint64_t i = 0; i < len; ++i) {
    uint64_t eff;
    translate(addr + i, eff);
    page_at(eff)->bytes[eff % kPageSize] = bytes[i];
  }
  return true;
}

ExitReport Machine::take_report() {
  report_.instructions_executed = executed_;
  return std::move(report_);
}

ExitReport run(const Program &program, const RunOptions &opts) {
  Machine m(program, opts);
  m.run();
  return m.take_report();
}

} // namespace partsforge::vm
