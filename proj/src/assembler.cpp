//===-- assembler.cpp - Two-pass assembler for the VM text format ---------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/vm.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace partsforge::vm {
namespace {

struct Token {
  enum Kind { Ident, Num, Punct, End } kind = End;
  std::string text;
  uint64_t num = 0;
};

struct AsmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '-';
}

std::vector<Token> lex_line(const std::string &raw) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    if (c == ';')
      break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    bool neg = c == '-' && i + 1 < raw.size() &&
               std::isdigit(static_cast<unsigned char>(raw[i + 1]));
    if (std::isdigit(static_cast<unsigned char>(c)) || neg) {
      size_t j = i + (neg ? 1 : 0);
      int base = 10;
      if (j + 1 < raw.size() && raw[j] == '0' &&
          (raw[j + 1] == 'x' || raw[j + 1] == 'X')) {
        base = 16;
        j += 2;
      }
      size_t start = j;
      while (j < raw.size() &&
             std::isxdigit(static_cast<unsigned char>(raw[j])) &&
             (base == 16 || std::isdigit(static_cast<unsigned char>(raw[j]))))
        ++j;
      if (start == j)
        throw AsmError("malformed number");
      uint64_t mag = std::stoull(raw.substr(start, j - start), nullptr, base);
      out.push_back({Token::Num, raw.substr(i, j - i),
                     neg ? static_cast<uint64_t>(-static_cast<int64_t>(mag))
                         : mag});
      i = j;
      continue;
    }
    if (ident_start(c)) {
      size_t j = i + 1;
      while (j < raw.size() && ident_char(raw[j]))
        ++j;
      out.push_back({Token::Ident, raw.substr(i, j - i), 0});
      i = j;
      continue;
    }
    if (std::string(",[]#=:").find(c) != std::string::npos) {
      out.push_back({Token::Punct, std::string(1, c), 0});
      ++i;
      continue;
    }
    throw AsmError(std::string("unexpected character '") + c + "'");
  }
  return out;
}

int parse_reg_name(const std::string &name) {
  if (name == "sp")
    return kRegSP;
  if (name == "fp")
    return kRegFP;
  if (name == "lr")
    return kRegLR;
  if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'X')) {
    bool digits = true;
    for (size_t i = 1; i < name.size(); ++i)
      digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
    if (digits) {
      int n = std::stoi(name.substr(1));
      if (n >= 0 && n <= 30)
        return n;
    }
  }
  return -1;
}

class LineParser {
public:
  LineParser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token &peek() const {
    static const Token end{};
    return pos_ < tokens_.size() ? tokens_[pos_] : end;
  }
  Token next() {
    Token t = peek();
    if (t.kind != Token::End)
      ++pos_;
    return t;
  }
  bool at_end() const { return pos_ >= tokens_.size(); }

  bool accept_punct(char c) {
    if (peek().kind == Token::Punct && peek().text[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_punct(char c) {
    if (!accept_punct(c))
      throw AsmError(std::string("expected '") + c + "'");
  }
  int expect_reg() {
    if (peek().kind != Token::Ident)
      throw AsmError("expected register");
    int r = parse_reg_name(next().text);
    if (r < 0)
      throw AsmError("unknown register");
    return r;
  }
  uint64_t expect_imm() {
    expect_punct('#');
    if (peek().kind != Token::Num)
      throw AsmError("expected immediate");
    return next().num;
  }
  std::string expect_sym() {
    if (peek().kind != Token::Ident)
      throw AsmError("expected symbol");
    return next().text;
  }
  void expect_end() {
    if (!at_end())
      throw AsmError("trailing tokens: '" + peek().text + "'");
  }

private:
  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

struct PendingRef {
  size_t instr_index;
  std::string symbol;
  int line;
};

struct DataRef {
  size_t data_offset;
  std::string symbol;
  int line;
};

const std::map<std::string, EventKind> kSiteKinds = {
    {"nonleaf-entry", EventKind::NonLeafEntry},
    {"leaf-entry", EventKind::LeafEntry},
    {"cp-create", EventKind::CpCreate},
    {"indirect-call", EventKind::IndirectCall},
    {"dp-load", EventKind::DpLoad},
    {"dp-store", EventKind::DpStore},
};

class Assembler {
public:
  AsmResult run(const std::string &source) {
    std::istringstream in(source);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      try {
        handle_line(raw, line);
      } catch (const AsmError &e) {
        diags_.push_back({line, e.what()});
      }
    }
    if (pending_site_)
      diags_.push_back({pending_site_line_, "dangling .site directive"});
    if (!pending_markers_.empty())
      diags_.push_back({pending_marker_line_, "dangling .marker directive"});
    resolve();
    AsmResult result;
    result.diagnostics = std::move(diags_);
    if (result.diagnostics.empty())
      result.program = std::move(prog_);
    return result;
  }

private:
  Program prog_;
  std::vector<Diagnostic> diags_;
  std::vector<PendingRef> code_refs_;
  std::vector<DataRef> data_refs_;
  bool in_data_ = false;
  std::optional<EventKind> pending_site_;
  int pending_site_line_ = 0;
  std::vector<std::string> pending_markers_;
  int pending_marker_line_ = 0;
  std::optional<std::string> pending_global_init_;
  int pending_global_init_line_ = 0;

  uint64_t next_code_addr() const {
    return kCodeBase + 4 * prog_.code.size();
  }

  void define_label(const std::string &name, int line) {
    uint64_t addr = in_data_ ? kDataBase + prog_.data.size() : next_code_addr();
    if (!prog_.symbols.emplace(name, addr).second)
      diags_.push_back({line, "duplicate label '" + name + "'"});
  }

  void handle_line(const std::string &raw, int line) {
    auto tokens = lex_line(raw);
    if (tokens.empty())
      return;
    LineParser p(std::move(tokens));

    if (p.peek().kind == Token::Ident && p.peek().text[0] == '.') {
      handle_directive(p, line);
      return;
    }
    // Label?
    {
      LineParser probe = p;
      if (probe.peek().kind == Token::Ident) {
        std::string name = probe.next().text;
        if (probe.accept_punct(':')) {
          probe.expect_end();
          define_label(name, line);
          return;
        }
      }
    }
    if (in_data_)
      throw AsmError("instruction in data section");
    emit(p, line);
  }

  void handle_directive(LineParser &p, int line) {
    std::string d = p.next().text;
    if (d == ".text") {
      in_data_ = false;
    } else if (d == ".data") {
      in_data_ = true;
    } else if (d == ".quad") {
      if (!in_data_)
        throw AsmError(".quad outside data section");
      uint64_t value = 0;
      if (p.accept_punct('=')) {
        data_refs_.push_back({prog_.data.size(), p.expect_sym(), line});
      } else if (p.peek().kind == Token::Num) {
        value = p.next().num;
      } else {
        data_refs_.push_back({prog_.data.size(), p.expect_sym(), line});
      }
      for (int i = 0; i < 8; ++i)
        prog_.data.push_back(static_cast<uint8_t>(value >> (8 * i)));
    } else if (d == ".site") {
      if (pending_site_)
        throw AsmError("stacked .site directives");
      auto it = kSiteKinds.find(p.expect_sym());
      if (it == kSiteKinds.end())
        throw AsmError("unknown site kind");
      pending_site_ = it->second;
      pending_site_line_ = line;
    } else if (d == ".marker") {
      pending_markers_.push_back(p.expect_sym());
      pending_marker_line_ = line;
    } else if (d == ".global-init") {
      if (pending_global_init_)
        throw AsmError("duplicate .global-init");
      pending_global_init_ = p.expect_sym();
      pending_global_init_line_ = line;
    } else {
      throw AsmError("unknown directive '" + d + "'");
    }
    p.expect_end();
  }

  void attach_annotations() {
    uint64_t addr = kCodeBase + 4 * (prog_.code.size() - 1);
    if (pending_site_) {
      prog_.sites[addr] = *pending_site_;
      pending_site_.reset();
    }
    for (const auto &name : pending_markers_) {
      if (!prog_.markers.emplace(name, addr).second)
        diags_.push_back({pending_marker_line_, "duplicate marker '" + name + "'"});
    }
    pending_markers_.clear();
  }

  Instr &push(Op op, int line) {
    Instr ins;
    ins.op = op;
    ins.line = line;
    prog_.code.push_back(ins);
    attach_annotations();
    return prog_.code.back();
  }

  void code_ref(const std::string &sym, int line) {
    code_refs_.push_back({prog_.code.size() - 1, sym, line});
  }

  void emit(LineParser &p, int line) {
    std::string m = p.next().text;

    auto reg_reg = [&](Op op) {
      Instr &i = push(op, line);
      i.rd = p.expect_reg();
      p.expect_punct(',');
      i.rn = p.expect_reg();
    };
    auto three_op = [&](Op reg_form, Op imm_form) {
      int rd = p.expect_reg();
      p.expect_punct(',');
      int rn = p.expect_reg();
      p.expect_punct(',');
      if (p.peek().kind == Token::Punct && p.peek().text == "#") {
        Instr &i = push(imm_form, line);
        i.rd = rd;
        i.rn = rn;
        i.imm = p.expect_imm();
      } else {
        Instr &i = push(reg_form, line);
        i.rd = rd;
        i.rn = rn;
        i.rm = p.expect_reg();
      }
    };
    auto mem_op = [&](Op op, bool pair) {
      int rt = p.expect_reg();
      p.expect_punct(',');
      int rt2 = -1;
      if (pair) {
        rt2 = p.expect_reg();
        p.expect_punct(',');
      }
      p.expect_punct('[');
      int rn = p.expect_reg();
      uint64_t off = 0;
      if (p.accept_punct(','))
        off = p.expect_imm();
      p.expect_punct(']');
      Instr &i = push(op, line);
      i.rd = rt;
      i.rm = rt2;
      i.rn = rn;
      i.imm = off;
    };
    auto pac_like = [&](Op op, KeyId key, int rd, bool zero, bool take_rn) {
      Instr &i = push(op, line);
      i.key = key;
      i.zero_mod = zero;
      if (rd >= 0) {
        i.rd = rd;
        i.rn = kRegSP;
      } else {
        i.rd = p.expect_reg();
        if (take_rn) {
          p.expect_punct(',');
          i.rn = p.expect_reg();
        }
      }
    };

    if (m == "mov") {
      int rd = p.expect_reg();
      p.expect_punct(',');
      if (p.peek().kind == Token::Punct && p.peek().text == "#") {
        Instr &i = push(Op::MovImm, line);
        i.rd = rd;
        i.imm = p.expect_imm();
      } else if (p.accept_punct('=')) {
        Instr &i = push(Op::MovSym, line);
        i.rd = rd;
        code_ref(p.expect_sym(), line);
      } else {
        Instr &i = push(Op::Mov, line);
        i.rd = rd;
        i.rn = p.expect_reg();
      }
    } else if (m == "movk") {
      Instr &i = push(Op::Movk, line);
      i.rd = p.expect_reg();
      p.expect_punct(',');
      i.imm = p.expect_imm();
      if (i.imm > 0xFFFF)
        throw AsmError("movk immediate exceeds 16 bits");
      if (p.accept_punct(',')) {
        if (p.expect_sym() != "lsl")
          throw AsmError("expected lsl");
        uint64_t s = p.expect_imm();
        if (s != 0 && s != 16 && s != 32 && s != 48)
          throw AsmError("movk shift must be 0, 16, 32 or 48");
        i.rm = static_cast<int>(s);
      } else {
        i.rm = 0;
      }
    } else if (m == "add") {
      three_op(Op::Add, Op::AddImm);
    } else if (m == "sub") {
      three_op(Op::Sub, Op::SubImm);
    } else if (m == "mul") {
      three_op(Op::Mul, Op::MulImm);
    } else if (m == "eor") {
      three_op(Op::Eor, Op::EorImm);
    } else if (m == "cmp") {
      int rn = p.expect_reg();
      p.expect_punct(',');
      if (p.peek().kind == Token::Punct && p.peek().text == "#") {
        Instr &i = push(Op::CmpImm, line);
        i.rn = rn;
        i.imm = p.expect_imm();
      } else {
        Instr &i = push(Op::Cmp, line);
        i.rn = rn;
        i.rm = p.expect_reg();
      }
    } else if (m == "b") {
      push(Op::B, line);
      code_ref(p.expect_sym(), line);
    } else if (m == "b.eq" || m == "b.ne" || m == "b.lt" || m == "b.ge") {
      Instr &i = push(Op::Bcond, line);
      i.cond = m == "b.eq"   ? Cond::Eq
               : m == "b.ne" ? Cond::Ne
               : m == "b.lt" ? Cond::Lt
                             : Cond::Ge;
      code_ref(p.expect_sym(), line);
    } else if (m == "bl") {
      push(Op::Bl, line);
      code_ref(p.expect_sym(), line);
    } else if (m == "blr") {
      push(Op::Blr, line).rn = p.expect_reg();
    } else if (m == "br") {
      push(Op::Br, line).rn = p.expect_reg();
    } else if (m == "ret") {
      push(Op::Ret, line);
    } else if (m == "ldr") {
      mem_op(Op::Ldr, false);
    } else if (m == "str") {
      mem_op(Op::Str, false);
    } else if (m == "ldp") {
      mem_op(Op::Ldp, true);
    } else if (m == "stp") {
      mem_op(Op::Stp, true);
    } else if (m == "out") {
      push(Op::Out, line).rn = p.expect_reg();
    } else if (m == "halt") {
      push(Op::Halt, line);
    } else if (m == "nop") {
      push(Op::Nop, line);
    } else if (m == "pacia" || m == "pacib" || m == "pacda" || m == "pacdb" ||
               m == "autia" || m == "autib" || m == "autda" || m == "autdb") {
      KeyId key = m[3] == 'i' ? (m[4] == 'a' ? KeyId::IA : KeyId::IB)
                              : (m[4] == 'a' ? KeyId::DA : KeyId::DB);
      pac_like(m[0] == 'p' ? Op::Pac : Op::Aut, key, -1, false, true);
    } else if (m == "paciasp" || m == "pacibsp" || m == "autiasp" ||
               m == "autibsp") {
      KeyId key = m[4] == 'a' ? KeyId::IA : KeyId::IB;
      pac_like(m[0] == 'p' ? Op::Pac : Op::Aut, key, kRegLR, false, false);
    } else if (m == "paciza" || m == "pacizb" || m == "pacdza" ||
               m == "pacdzb" || m == "autiza" || m == "autizb" ||
               m == "autdza" || m == "autdzb") {
      KeyId key = m[3] == 'i' ? (m[5] == 'a' ? KeyId::IA : KeyId::IB)
                              : (m[5] == 'a' ? KeyId::DA : KeyId::DB);
      pac_like(m[0] == 'p' ? Op::Pac : Op::Aut, key, -1, true, false);
    } else if (m == "paciaz" || m == "pacibz" || m == "autiaz" ||
               m == "autibz") {
      KeyId key = m[4] == 'a' ? KeyId::IA : KeyId::IB;
      pac_like(m[0] == 'p' ? Op::Pac : Op::Aut, key, kRegLR, true, false);
    } else if (m == "pacga") {
      prog_.has_combined_pa = true;
      Instr &i = push(Op::Pacga, line);
      i.rd = p.expect_reg();
      p.expect_punct(',');
      i.rn = p.expect_reg();
      p.expect_punct(',');
      i.rm = p.expect_reg();
    } else if (m == "xpaci" || m == "xpacd") {
      push(m == "xpaci" ? Op::Xpaci : Op::Xpacd, line).rd = p.expect_reg();
    } else if (m == "retaa" || m == "retab") {
      prog_.has_combined_pa = true;
      push(m == "retaa" ? Op::Retaa : Op::Retab, line);
    } else if (m == "braa" || m == "brab" || m == "blraa" || m == "blrab") {
      prog_.has_combined_pa = true;
      Op op = m == "braa"    ? Op::Braa
              : m == "brab"  ? Op::Brab
              : m == "blraa" ? Op::Blraa
                             : Op::Blrab;
      reg_reg(op);
    } else if (m == "ldraa" || m == "ldrab") {
      prog_.has_combined_pa = true;
      int rt = p.expect_reg();
      p.expect_punct(',');
      p.expect_punct('[');
      int rn = p.expect_reg();
      p.expect_punct(']');
      Instr &i = push(m == "ldraa" ? Op::Ldraa : Op::Ldrab, line);
      i.rd = rt;
      i.rn = rn;
    } else {
      throw AsmError("unknown mnemonic '" + m + "'");
    }
    p.expect_end();
  }

  void resolve() {
    for (const auto &ref : code_refs_) {
      auto it = prog_.symbols.find(ref.symbol);
      if (it == prog_.symbols.end()) {
        diags_.push_back({ref.line, "undefined symbol '" + ref.symbol + "'"});
        continue;
      }
      prog_.code[ref.instr_index].imm = it->second;
    }
    for (const auto &ref : data_refs_) {
      auto it = prog_.symbols.find(ref.symbol);
      if (it == prog_.symbols.end()) {
        diags_.push_back({ref.line, "undefined symbol '" + ref.symbol + "'"});
        continue;
      }
      uint64_t v = it->second;
      for (int i = 0; i < 8; ++i)
        prog_.data[ref.data_offset + static_cast<size_t>(i)] =
            static_cast<uint8_t>(v >> (8 * i));
    }
    if (pending_global_init_) {
      auto it = prog_.symbols.find(*pending_global_init_);
      if (it == prog_.symbols.end())
        diags_.push_back({pending_global_init_line_,
                          "undefined symbol '" + *pending_global_init_ + "'"});
      else
        prog_.global_init = it->second;
    }
    if (prog_.data.size() > kStackTop - kStackSize - kDataBase)
      diags_.push_back({0, "data section too large"});
  }
};

} // namespace

std::optional<uint64_t> Program::symbol(const std::string &name) const {
  auto it = symbols.find(name);
  if (it == symbols.end())
    return std::nullopt;
  return it->second;
}

AsmResult assemble(const std::string &source) {
  return Assembler().run(source);
}

} // namespace partsforge::vm
