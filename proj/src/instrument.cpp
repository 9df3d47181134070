//===-- instrument.cpp - Lowering and scheme insertion --------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Lowering strategy. Virtual registers live in a callee-saved pool
// (X19..X26) assigned by linear scan; the overflow goes to frame slots.
// X9..X13 are per-instruction scratch, X15 carries PA modifiers. Frames are
// SP-relative throughout:
//
//   [SP + 0]   saved FP          (non-leaf only)
//   [SP + 8]   saved LR          (non-leaf only)
//   [SP + ..]  pool register saves (untyped register dump, uninstrumented)
//   [SP + ..]  local slots
//   [SP + ..]  spilled virtual registers (typed; data pointers get dps
//              treatment on every spill store and reload)
//
// Return-address signing uses the entry SP: the modifier is materialised
// before the frame is allocated and after it is released, mirroring how a
// prologue pass sees SP. Every PA instruction is preceded by exactly four
// modifier-setup instructions (mov + 3 movk).
//
//===----------------------------------------------------------------------===//

#include "partsforge/instrument.hpp"

#include "partsforge/pa_core.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>
#include <sstream>

namespace partsforge::instrument {

using tir::Opcode;
using tir::TypePtr;

std::string SchemeSet::to_string() const {
  if (!any())
    return "none";
  std::string s;
  auto add = [&](const char *name) {
    if (!s.empty())
      s += '+';
    s += name;
  };
  if (ras)
    add("ras");
  if (cps)
    add("cps");
  if (dps)
    add("dps");
  return s;
}

SchemeSet SchemeSet::from_string(const std::string &s) {
  SchemeSet out;
  if (s == "none" || s.empty())
    return out;
  std::string part;
  auto flush = [&] {
    if (part == "ras")
      out.ras = true;
    else if (part == "cps")
      out.cps = true;
    else if (part == "dps")
      out.dps = true;
    else
      throw std::invalid_argument("unknown scheme '" + part + "'");
    part.clear();
  };
  for (char c : s) {
    if (c == '+' || c == ',')
      flush();
    else
      part += c;
  }
  flush();
  return out;
}

std::vector<SchemeSet> SchemeSet::all_combinations() {
  std::vector<SchemeSet> out;
  for (int mask = 0; mask < 8; ++mask)
    out.push_back({(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0});
  return out;
}

std::map<std::string, uint64_t> assign_function_ids(const tir::Program &prog,
                                                    uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, uint64_t> ids;
  std::vector<uint64_t> taken;
  for (const auto &fn : prog.functions) {
    if (fn.is_extern)
      continue;
    uint64_t fid;
    do {
      fid = rng() & 0xFFFF'FFFF'FFFFULL;
    } while (std::find(taken.begin(), taken.end(), fid) != taken.end());
    taken.push_back(fid);
    ids[fn.name] = fid;
  }
  return ids;
}

namespace {

std::string hex(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

struct Range {
  int start = 0;
  int end = 0;
};

class FunctionLowering {
public:
  FunctionLowering(const tir::Program &prog, const tir::Function &fn,
                   SchemeSet schemes, uint64_t fid, std::string &out,
                   Manifest &manifest)
      : prog_(prog), fn_(fn), schemes_(schemes), fid_(fid), out_(out),
        manifest_(manifest), types_(tir::vreg_types(fn, prog)),
        leaf_(fn.is_leaf()) {}

  void run() {
    linearize();
    compute_ranges();
    allocate();
    layout_frame();
    emit_prologue();
    for (size_t b = 0; b < fn_.blocks.size(); ++b) {
      label(block_label(fn_.blocks[b].label));
      for (const auto &ins : fn_.blocks[b].instrs)
        emit_instr(ins);
    }
  }

private:
  const tir::Program &prog_;
  const tir::Function &fn_;
  SchemeSet schemes_;
  uint64_t fid_;
  std::string &out_;
  Manifest &manifest_;
  std::map<std::string, TypePtr> types_;
  bool leaf_;

  std::vector<const tir::Instr *> linear_;
  std::map<std::string, int> block_start_;
  std::vector<std::string> vreg_order_;
  std::map<std::string, Range> ranges_;
  std::map<std::string, int> reg_home_;
  std::map<std::string, uint64_t> mem_home_;
  std::map<const tir::Instr *, uint64_t> local_off_;
  std::vector<int> used_pool_;
  std::map<int, uint64_t> pool_save_off_;
  uint64_t frame_size_ = 0;
  int cmp_counter_ = 0;

  // --- naming -----------------------------------------------------------

  std::string block_label(const std::string &l) const {
    return fn_.name + "__" + l;
  }

  // --- liveness and allocation ------------------------------------------

  void linearize() {
    for (const auto &b : fn_.blocks) {
      block_start_[b.label] = static_cast<int>(linear_.size());
      for (const auto &ins : b.instrs)
        linear_.push_back(&ins);
    }
  }

  void touch(const std::string &v, int index) {
    auto it = ranges_.find(v);
    if (it == ranges_.end()) {
      vreg_order_.push_back(v);
      ranges_[v] = {index, index};
    } else {
      it->second.end = std::max(it->second.end, index);
    }
  }

  void compute_ranges() {
    for (const auto &p : fn_.params)
      touch(p.name, -1);
    for (size_t i = 0; i < linear_.size(); ++i) {
      const tir::Instr &ins = *linear_[i];
      int idx = static_cast<int>(i);
      for (const auto &a : ins.args)
        touch(a, idx);
      if (!ins.dst.empty())
        touch(ins.dst, idx);
    }
    // A value live across a backward branch stays live for the whole loop.
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < linear_.size(); ++i) {
        const tir::Instr &ins = *linear_[i];
        std::vector<std::string> targets;
        if (ins.op == Opcode::Jmp)
          targets = {ins.sym};
        else if (ins.op == Opcode::Br)
          targets = {ins.sym, ins.target2};
        for (const auto &t : targets) {
          int h = block_start_.at(t);
          int k = static_cast<int>(i);
          if (h > k)
            continue;
          for (auto &[v, r] : ranges_) {
            if (r.start <= k && r.end >= h && r.end < k) {
              r.end = k;
              changed = true;
            }
          }
        }
      }
    }
  }

  void allocate() {
    std::vector<int> pool = {19, 20, 21, 22, 23, 24, 25, 26};
    std::vector<std::pair<std::string, Range>> order;
    for (const auto &v : vreg_order_)
      order.emplace_back(v, ranges_[v]);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto &a, const auto &b) {
                       return a.second.start < b.second.start;
                     });
    std::vector<std::pair<std::string, int>> active; // vreg, pool reg
    uint64_t spill_index = 0;
    for (const auto &[v, r] : order) {
      for (auto it = active.begin(); it != active.end();) {
        if (ranges_[it->first].end < r.start) {
          pool.insert(std::lower_bound(pool.begin(), pool.end(), it->second),
                      it->second);
          it = active.erase(it);
        } else {
          ++it;
        }
      }
      if (!pool.empty()) {
        int reg = pool.front();
        pool.erase(pool.begin());
        reg_home_[v] = reg;
        active.emplace_back(v, reg);
        if (std::find(used_pool_.begin(), used_pool_.end(), reg) ==
            used_pool_.end())
          used_pool_.push_back(reg);
      } else {
        mem_home_[v] = spill_index++; // offsets assigned in layout_frame
      }
    }
    std::sort(used_pool_.begin(), used_pool_.end());
  }

  void layout_frame() {
    uint64_t off = leaf_ ? 0 : 16;
    for (int reg : used_pool_) {
      pool_save_off_[reg] = off;
      off += 8;
    }
    for (const auto *ins : linear_) {
      if (ins->op == Opcode::Local) {
        local_off_[ins] = off;
        off += tir::type_size(ins->type, prog_.records);
      }
    }
    for (const auto &v : vreg_order_) {
      auto it = mem_home_.find(v);
      if (it != mem_home_.end())
        it->second = off + 8 * it->second;
    }
    uint64_t spills = 8 * mem_home_.size();
    frame_size_ = (off + spills + 15) & ~uint64_t{15};
  }

  // --- emission helpers --------------------------------------------------

  void line(const std::string &s) { out_ += "  " + s + "\n"; }
  void label(const std::string &l) { out_ += l + ":\n"; }
  void site(const char *kind) { out_ += "  .site " + std::string(kind) + "\n"; }

  static std::string reg(int r) {
    if (r == 31)
      return "sp";
    return "x" + std::to_string(r);
  }

  /// Four instructions loading a 64-bit type-id into X15.
  void setup_type_id(uint64_t tid) {
    line("mov x15, #" + hex(tid & 0xFFFF));
    line("movk x15, #" + hex((tid >> 16) & 0xFFFF) + ", lsl #16");
    line("movk x15, #" + hex((tid >> 32) & 0xFFFF) + ", lsl #32");
    line("movk x15, #" + hex((tid >> 48) & 0xFFFF) + ", lsl #48");
  }

  /// Four instructions composing (function_id << 16) | SP[15:0] into X15.
  void setup_ras_modifier() {
    line("mov x15, sp");
    line("movk x15, #" + hex(fid_ & 0xFFFF) + ", lsl #16");
    line("movk x15, #" + hex((fid_ >> 16) & 0xFFFF) + ", lsl #32");
    line("movk x15, #" + hex((fid_ >> 32) & 0xFFFF) + ", lsl #48");
  }

  void record_site(const char *kind, const char *key, const std::string &mod,
                   const std::string &type) {
    manifest_.sites.push_back({fn_.name, kind, key, mod, type});
  }

  uint64_t tid_of(const TypePtr &t) const {
    return tir::type_id(t, prog_.records);
  }
  std::string enc_of(const TypePtr &t) const {
    return tir::type_encode(t, prog_.records);
  }

  /// Copies or reloads a vreg into `target` (an Xn scratch or argument
  /// register). Spill reloads of data pointers authenticate under dps.
  void read_into(const std::string &v, int target) {
    auto rit = reg_home_.find(v);
    if (rit != reg_home_.end()) {
      line("mov " + reg(target) + ", " + reg(rit->second));
      return;
    }
    uint64_t off = mem_home_.at(v);
    const TypePtr &t = types_.at(v);
    bool dptr = tir::is_data_pointer(t);
    if (dptr) {
      site("dp-load");
      ++manifest_.static_counts.dp_load_sites;
    }
    line("ldr " + reg(target) + ", [sp, #" + std::to_string(off) + "]");
    if (dptr && schemes_.dps) {
      uint64_t tid = tid_of(t->pointee);
      setup_type_id(tid);
      line("autda " + reg(target) + ", x15");
      record_site("dps-auth", "DA", hex(tid), enc_of(t->pointee));
    }
  }

  /// Stores `src` into the vreg's home. Spill stores of data pointers sign
  /// under dps.
  void write_vreg(const std::string &v, int src) {
    auto rit = reg_home_.find(v);
    if (rit != reg_home_.end()) {
      line("mov " + reg(rit->second) + ", " + reg(src));
      return;
    }
    uint64_t off = mem_home_.at(v);
    const TypePtr &t = types_.at(v);
    bool dptr = tir::is_data_pointer(t);
    if (dptr) {
      site("dp-store");
      ++manifest_.static_counts.dp_store_sites;
    }
    if (dptr && schemes_.dps) {
      uint64_t tid = tid_of(t->pointee);
      setup_type_id(tid);
      line("pacda " + reg(src) + ", x15");
      record_site("dps-sign", "DA", hex(tid), enc_of(t->pointee));
    }
    line("str " + reg(src) + ", [sp, #" + std::to_string(off) + "]");
  }

  // --- prologue / epilogue ------------------------------------------------

  void emit_prologue() {
    label(fn_.name);
    site(leaf_ ? "leaf-entry" : "nonleaf-entry");
    if (leaf_)
      ++manifest_.static_counts.leaf_functions;
    else
      ++manifest_.static_counts.nonleaf_functions;

    if (!leaf_ && schemes_.ras) {
      setup_ras_modifier();
      line("pacib lr, x15");
      record_site("ras-sign", "IB", "sp+function-id", "");
    }
    if (frame_size_ > 0)
      line("sub sp, sp, #" + std::to_string(frame_size_));
    if (!leaf_) {
      line("stp fp, lr, [sp, #0]");
      line("mov fp, sp");
    }
    for (int r : used_pool_)
      line("str " + reg(r) + ", [sp, #" + std::to_string(pool_save_off_[r]) +
           "]");
    for (size_t i = 0; i < fn_.params.size(); ++i)
      write_vreg(fn_.params[i].name, static_cast<int>(i));
  }

  void emit_epilogue() {
    for (int r : used_pool_)
      line("ldr " + reg(r) + ", [sp, #" + std::to_string(pool_save_off_[r]) +
           "]");
    if (!leaf_)
      line("ldp fp, lr, [sp, #0]");
    if (frame_size_ > 0)
      line("add sp, sp, #" + std::to_string(frame_size_));
    if (!leaf_ && schemes_.ras) {
      setup_ras_modifier();
      line("autib lr, x15");
      record_site("ras-auth", "IB", "sp+function-id", "");
    }
    line("ret");
  }

  // --- instruction emission ----------------------------------------------

  uint64_t field_offset(const TypePtr &rec_ptr, int64_t index) const {
    const TypePtr &pt = rec_ptr->pointee;
    const std::vector<TypePtr> &fields =
        pt->kind == tir::TypeKind::Rec ? pt->fields
                                       : *prog_.records.find(pt->rec_name);
    uint64_t off = 0;
    for (int64_t i = 0; i < index; ++i)
      off += tir::type_size(fields[static_cast<size_t>(i)], prog_.records);
    return off;
  }

  void emit_compare(const tir::Instr &ins, const char *cond) {
    read_into(ins.args[0], 9);
    read_into(ins.args[1], 10);
    std::string l = fn_.name + "__cmp" + std::to_string(cmp_counter_++);
    line("cmp x9, x10");
    line("mov x9, #1");
    line(std::string("b.") + cond + " " + l);
    line("mov x9, #0");
    label(l);
    write_vreg(ins.dst, 9);
  }

  void stage_args(const tir::Instr &ins, size_t first) {
    for (size_t i = first; i < ins.args.size(); ++i)
      read_into(ins.args[i], static_cast<int>(i - first));
  }

  void emit_instr(const tir::Instr &ins) {
    switch (ins.op) {
    case Opcode::Const:
      line("mov x9, #" + std::to_string(ins.imm));
      write_vreg(ins.dst, 9);
      break;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul: {
      read_into(ins.args[0], 9);
      read_into(ins.args[1], 10);
      const char *m = ins.op == Opcode::Add   ? "add"
                      : ins.op == Opcode::Sub ? "sub"
                                              : "mul";
      line(std::string(m) + " x9, x9, x10");
      write_vreg(ins.dst, 9);
      break;
    }
    case Opcode::Eq: emit_compare(ins, "eq"); break;
    case Opcode::Ne: emit_compare(ins, "ne"); break;
    case Opcode::Lt: emit_compare(ins, "lt"); break;
    case Opcode::Ge: emit_compare(ins, "ge"); break;
    case Opcode::Load: {
      read_into(ins.args[0], 11);
      TypePtr loaded = types_.at(ins.args[0])->pointee;
      bool dptr = tir::is_data_pointer(loaded);
      if (dptr) {
        site("dp-load");
        ++manifest_.static_counts.dp_load_sites;
      }
      line("ldr x9, [x11]");
      if (dptr && schemes_.dps) {
        uint64_t tid = tid_of(loaded->pointee);
        setup_type_id(tid);
        line("autda x9, x15");
        record_site("dps-auth", "DA", hex(tid), enc_of(loaded->pointee));
      }
      write_vreg(ins.dst, 9);
      break;
    }
    case Opcode::Store: {
      read_into(ins.args[0], 9);
      read_into(ins.args[1], 11);
      TypePtr stored = types_.at(ins.args[0]);
      bool dptr = tir::is_data_pointer(stored);
      if (dptr) {
        site("dp-store");
        ++manifest_.static_counts.dp_store_sites;
      }
      if (dptr && schemes_.dps) {
        uint64_t tid = tid_of(stored->pointee);
        setup_type_id(tid);
        line("pacda x9, x15");
        record_site("dps-sign", "DA", hex(tid), enc_of(stored->pointee));
      }
      line("str x9, [x11]");
      break;
    }
    case Opcode::Addr: {
      if (prog_.find_global(ins.sym)) {
        line("mov x9, =" + ins.sym);
      } else {
        site("cp-create");
        ++manifest_.static_counts.cp_create_sites;
        line("mov x9, =" + ins.sym);
        if (schemes_.cps) {
          TypePtr sig = prog_.find_function(ins.sym)->signature();
          uint64_t tid = tid_of(sig);
          setup_type_id(tid);
          line("pacia x9, x15");
          record_site("cps-sign", "IA", hex(tid), enc_of(sig));
        }
      }
      write_vreg(ins.dst, 9);
      break;
    }
    case Opcode::Field: {
      read_into(ins.args[0], 11);
      uint64_t off = field_offset(types_.at(ins.args[0]), ins.imm);
      line("add x9, x11, #" + std::to_string(off));
      write_vreg(ins.dst, 9);
      break;
    }
    case Opcode::Elem: {
      read_into(ins.args[0], 11);
      read_into(ins.args[1], 10);
      uint64_t esize =
          tir::type_size(types_.at(ins.args[0])->pointee->elem, prog_.records);
      line("mul x12, x10, #" + std::to_string(esize));
      line("add x9, x11, x12");
      write_vreg(ins.dst, 9);
      break;
    }
    case Opcode::Call: {
      stage_args(ins, 0);
      const tir::Function *callee = prog_.find_function(ins.sym);
      if (callee && callee->is_extern) {
        // No body to branch to; reach for the unmapped null page so the
        // call faults the moment it executes.
        line("mov x13, #0x0");
        line("blr x13");
      } else {
        line("bl " + ins.sym);
      }
      if (!ins.dst.empty())
        write_vreg(ins.dst, 0);
      break;
    }
    case Opcode::Icall: {
      stage_args(ins, 1);
      read_into(ins.args[0], 13);
      TypePtr sig = types_.at(ins.args[0])->pointee;
      ++manifest_.static_counts.indirect_call_sites;
      if (schemes_.cps) {
        uint64_t tid = tid_of(sig);
        setup_type_id(tid);
        site("indirect-call");
        line("blraa x13, x15");
        record_site("cps-auth", "IA", hex(tid), enc_of(sig));
      } else {
        site("indirect-call");
        line("blr x13");
      }
      if (!ins.dst.empty())
        write_vreg(ins.dst, 0);
      break;
    }
    case Opcode::Cast:
      read_into(ins.args[0], 9);
      write_vreg(ins.dst, 9);
      break;
    case Opcode::Local:
      line("add x9, sp, #" + std::to_string(local_off_.at(&ins)));
      write_vreg(ins.dst, 9);
      break;
    case Opcode::Br:
      read_into(ins.args[0], 9);
      line("cmp x9, #0");
      line("b.ne " + block_label(ins.sym));
      line("b " + block_label(ins.target2));
      break;
    case Opcode::Jmp:
      line("b " + block_label(ins.sym));
      break;
    case Opcode::Ret:
      if (!ins.args.empty())
        read_into(ins.args[0], 0);
      emit_epilogue();
      break;
    case Opcode::Out:
      read_into(ins.args[0], 9);
      line("out x9");
      break;
    case Opcode::Marker:
      out_ += "  .marker " + ins.sym + "\n";
      break;
    }
  }
};

/// Bootstrap run before main: every pointer-valued global slot is loaded,
/// signed under the active schemes, and stored back. The load/store
/// skeleton and the event site tag are emitted for every lowering so that
/// instruction-count deltas and event counts across scheme choices differ
/// only by the modifier setup and the PA instruction itself.
void emit_bootstrap(const tir::Program &prog, SchemeSet schemes,
                    std::string &out, Manifest &manifest) {
  out += "__pa_init:\n";
  for (const auto &g : prog.globals) {
    auto slot_types = tir::flatten_slots(g.type, prog.records);
    for (size_t k = 0; k < slot_types.size(); ++k) {
      const TypePtr &st = slot_types[k];
      bool code = tir::is_code_pointer(st);
      bool data = tir::is_data_pointer(st);
      if (!code && !data)
        continue;
      uint64_t off = 8 * k;
      out += "  mov x9, =" + g.name + "\n";
      if (off > 0)
        out += "  add x9, x9, #" + std::to_string(off) + "\n";
      out += "  ldr x10, [x9]\n";
      bool sign = (code && schemes.cps) || (data && schemes.dps);
      uint64_t tid = tir::type_id(st->pointee, prog.records);
      std::string enc = tir::type_encode(st->pointee, prog.records);
      if (sign) {
        out += "  mov x15, #" + hex(tid & 0xFFFF) + "\n";
        out += "  movk x15, #" + hex((tid >> 16) & 0xFFFF) + ", lsl #16\n";
        out += "  movk x15, #" + hex((tid >> 32) & 0xFFFF) + ", lsl #32\n";
        out += "  movk x15, #" + hex((tid >> 48) & 0xFFFF) + ", lsl #48\n";
        out += code ? "  pacia x10, x15\n" : "  pacda x10, x15\n";
      }
      out += code ? "  .site cp-create\n" : "  .site dp-store\n";
      out += "  str x10, [x9]\n";
      if (code)
        ++manifest.static_counts.cp_create_sites;
      else
        ++manifest.static_counts.dp_store_sites;

      if (sign) {
        std::string target;
        if (k < g.slots.size() && g.slots[k].kind == tir::InitSlot::AddrOf)
          target = g.slots[k].ref;
        manifest.sites.push_back({"__pa_init",
                                  code ? "cps-sign" : "dps-sign",
                                  code ? "IA" : "DA", hex(tid), enc});
        manifest.global_init.push_back(
            {g.name, off, target, code ? "IA" : "DA", tid, enc});
      }
    }
  }
  out += "  ret\n";
}

} // namespace

LowerResult lower(const tir::Program &prog, SchemeSet schemes, uint64_t seed) {
  if (!prog.find_function("main") || prog.find_function("main")->is_extern)
    throw ContractViolation("program has no main function");
  for (const char *reserved : {"__start", "__pa_init"})
    if (prog.find_function(reserved) || prog.find_global(reserved))
      throw ContractViolation(std::string("reserved name: ") + reserved);

  LowerResult result;
  Manifest &m = result.manifest;
  m.schemes = schemes;
  m.function_id_seed = seed;
  m.function_ids = assign_function_ids(prog, seed);
  m.contains_externs = prog.has_externs();

  std::string &out = result.assembly;
  out += "__start:\n";
  out += "  bl __pa_init\n";
  out += "  bl main\n";
  out += "  halt\n";
  emit_bootstrap(prog, schemes, out, m);

  for (const auto &fn : prog.functions) {
    if (fn.is_extern)
      continue;
    FunctionLowering(prog, fn, schemes, m.function_ids.at(fn.name), out, m)
        .run();
  }

  out += ".global-init __pa_init\n";
  out += ".data\n";
  for (const auto &g : prog.globals) {
    out += g.name + ":\n";
    size_t nslots = tir::type_size(g.type, prog.records) / 8;
    for (size_t k = 0; k < nslots; ++k) {
      if (k < g.slots.size() && g.slots[k].kind == tir::InitSlot::AddrOf)
        out += "  .quad =" + g.slots[k].ref + "\n";
      else if (k < g.slots.size())
        out += "  .quad " + std::to_string(g.slots[k].value) + "\n";
      else
        out += "  .quad 0\n";
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["schemes"] = schemes.to_string();
  j["function_id_seed"] = function_id_seed;
  nlohmann::ordered_json ids = nlohmann::ordered_json::object();
  for (const auto &[name, fid] : function_ids)
    ids[name] = fid;
  j["function_ids"] = ids;
  j["sites"] = nlohmann::ordered_json::array();
  for (const auto &s : sites) {
    j["sites"].push_back({{"function", s.function},
                          {"kind", s.kind},
                          {"key", s.key},
                          {"modifier", s.modifier},
                          {"type", s.type}});
  }
  j["global_init"] = nlohmann::ordered_json::array();
  for (const auto &e : global_init) {
    j["global_init"].push_back({{"global", e.global},
                                {"slot_offset", e.slot_offset},
                                {"target", e.target},
                                {"key", e.key},
                                {"modifier", e.modifier},
                                {"type", e.type}});
  }
  j["static_counts"] = {
      {"nonleaf_functions", static_counts.nonleaf_functions},
      {"leaf_functions", static_counts.leaf_functions},
      {"cp_create_sites", static_counts.cp_create_sites},
      {"indirect_call_sites", static_counts.indirect_call_sites},
      {"dp_load_sites", static_counts.dp_load_sites},
      {"dp_store_sites", static_counts.dp_store_sites},
  };
  j["contains_externs"] = contains_externs;
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string &text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Manifest m;
  m.schemes = SchemeSet::from_string(j.at("schemes").get<std::string>());
  m.function_id_seed = j.at("function_id_seed").get<uint64_t>();
  for (const auto &[name, fid] : j.at("function_ids").items())
    m.function_ids[name] = fid.get<uint64_t>();
  for (const auto &s : j.at("sites"))
    m.sites.push_back({s.at("function").get<std::string>(),
                       s.at("kind").get<std::string>(),
                       s.at("key").get<std::string>(),
                       s.at("modifier").get<std::string>(),
                       s.at("type").get<std::string>()});
  for (const auto &e : j.at("global_init"))
    m.global_init.push_back({e.at("global").get<std::string>(),
                             e.at("slot_offset").get<uint64_t>(),
                             e.at("target").get<std::string>(),
                             e.at("key").get<std::string>(),
                             e.at("modifier").get<uint64_t>(),
                             e.at("type").get<std::string>()});
  const auto &sc = j.at("static_counts");
  m.static_counts = {sc.at("nonleaf_functions").get<uint64_t>(),
                     sc.at("leaf_functions").get<uint64_t>(),
                     sc.at("cp_create_sites").get<uint64_t>(),
                     sc.at("indirect_call_sites").get<uint64_t>(),
                     sc.at("dp_load_sites").get<uint64_t>(),
                     sc.at("dp_store_sites").get<uint64_t>()};
  m.contains_externs = j.at("contains_externs").get<bool>();
  return m;
}

} // namespace partsforge::instrument
