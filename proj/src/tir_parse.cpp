//===-- tir_parse.cpp - IR parsing, validation, printing ------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The grammar is line-oriented: every declaration header, record, global and
// instruction sits on its own line; ';' starts a comment. See docs/tir.md for
// the full grammar.
//
//===----------------------------------------------------------------------===//

#include "partsforge/pa_core.hpp"
#include "partsforge/tir.hpp"

#include <cctype>
#include <functional>
#include <set>
#include <sstream>

namespace partsforge::tir {
namespace {

struct Token {
  enum Kind { Ident, Vreg, Num, Punct, End } kind = End;
  std::string text;
  int64_t num = 0;
};

struct Line {
  int number = 0;
  std::vector<Token> tokens;
};

class ParseError : public std::runtime_error {
public:
  int line;
  ParseError(int line, const std::string &msg)
      : std::runtime_error(msg), line(line) {}
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Line> lex(const std::string &source) {
  std::vector<Line> lines;
  std::istringstream in(source);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    Line line{number, {}};
    size_t i = 0;
    while (i < raw.size()) {
      char c = raw[i];
      if (c == ';')
        break;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (ident_start(c)) {
        size_t j = i;
        while (j < raw.size() && ident_char(raw[j]))
          ++j;
        line.tokens.push_back({Token::Ident, raw.substr(i, j - i), 0});
        i = j;
        continue;
      }
      if (c == '%' && i + 1 < raw.size() && ident_start(raw[i + 1])) {
        size_t j = i + 1;
        while (j < raw.size() && ident_char(raw[j]))
          ++j;
        line.tokens.push_back({Token::Vreg, raw.substr(i, j - i), 0});
        i = j;
        continue;
      }
      bool neg = c == '-' && i + 1 < raw.size() &&
                 std::isdigit(static_cast<unsigned char>(raw[i + 1]));
      if (std::isdigit(static_cast<unsigned char>(c)) || neg) {
        size_t j = i + (neg ? 1 : 0);
        size_t start = j;
        int base = 10;
        if (j + 1 < raw.size() && raw[j] == '0' &&
            (raw[j + 1] == 'x' || raw[j + 1] == 'X')) {
          base = 16;
          j += 2;
          start = j;
          while (j < raw.size() && std::isxdigit(static_cast<unsigned char>(raw[j])))
            ++j;
        } else {
          while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j])))
            ++j;
        }
        if (start == j)
          throw ParseError(number, "malformed number");
        uint64_t mag = std::stoull(raw.substr(start, j - start), nullptr, base);
        int64_t value = neg ? -static_cast<int64_t>(mag)
                            : static_cast<int64_t>(mag);
        line.tokens.push_back({Token::Num, raw.substr(i, j - i), value});
        i = j;
        continue;
      }
      if (std::string("(){},:=|&").find(c) != std::string::npos) {
        line.tokens.push_back({Token::Punct, std::string(1, c), 0});
        ++i;
        continue;
      }
      throw ParseError(number, std::string("unexpected character '") + c + "'");
    }
    if (!line.tokens.empty())
      lines.push_back(std::move(line));
  }
  return lines;
}

/// Cursor over one line's tokens.
class Cursor {
public:
  Cursor(const Line &line) : line_(line) {}

  const Token &peek() const {
    static const Token end{Token::End, "", 0};
    return pos_ < line_.tokens.size() ? line_.tokens[pos_] : end;
  }
  Token next() {
    Token t = peek();
    if (t.kind != Token::End)
      ++pos_;
    return t;
  }
  bool at_end() const { return pos_ >= line_.tokens.size(); }
  int line() const { return line_.number; }

  bool accept_punct(const char *p) {
    if (peek().kind == Token::Punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_punct(const char *p, const char *context) {
    if (!accept_punct(p))
      throw ParseError(line(), std::string("expected '") + p + "' " + context);
  }
  bool accept_ident(const char *word) {
    if (peek().kind == Token::Ident && peek().text == word) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string expect_ident(const char *context) {
    if (peek().kind != Token::Ident)
      throw ParseError(line(), std::string("expected identifier ") + context);
    return next().text;
  }
  std::string expect_vreg(const char *context) {
    if (peek().kind != Token::Vreg)
      throw ParseError(line(), std::string("expected virtual register ") + context);
    return next().text;
  }
  int64_t expect_num(const char *context) {
    if (peek().kind != Token::Num)
      throw ParseError(line(), std::string("expected number ") + context);
    return next().num;
  }
  void expect_end() {
    if (!at_end())
      throw ParseError(line(), "trailing tokens: '" + peek().text + "'");
  }

private:
  const Line &line_;
  size_t pos_ = 0;
};

TypePtr parse_type(Cursor &c);

std::vector<TypePtr> parse_type_list(Cursor &c, const char *close) {
  std::vector<TypePtr> types;
  if (c.accept_punct(close))
    return types;
  for (;;) {
    types.push_back(parse_type(c));
    if (c.accept_punct(close))
      return types;
    c.expect_punct(",", "in type list");
  }
}

TypePtr parse_type(Cursor &c) {
  std::string head = c.expect_ident("at start of type");
  if (head == "i8") return make_int(8);
  if (head == "i16") return make_int(16);
  if (head == "i32") return make_int(32);
  if (head == "i64") return make_int(64);
  if (head == "f32") return make_float(32);
  if (head == "f64") return make_float(64);
  if (head == "p") {
    c.expect_punct("(", "after p");
    TypePtr inner = parse_type(c);
    c.expect_punct(")", "after pointee type");
    return make_ptr(inner);
  }
  if (head == "fn") {
    c.expect_punct("(", "after fn");
    TypePtr ret;
    if (!c.accept_ident("void"))
      ret = parse_type(c);
    c.expect_punct("|", "after return type");
    return make_fn(ret, parse_type_list(c, ")"));
  }
  if (head == "rec") {
    c.expect_punct("(", "after rec");
    return make_rec(parse_type_list(c, ")"));
  }
  if (head == "arr") {
    c.expect_punct("(", "after arr");
    TypePtr elem = parse_type(c);
    c.expect_punct(",", "before array length");
    int64_t n = c.expect_num("as array length");
    if (n <= 0)
      throw ParseError(c.line(), "array length must be positive");
    c.expect_punct(")", "after array length");
    return make_arr(elem, static_cast<uint64_t>(n));
  }
  return make_rec_name(head); // resolved during validation
}

void parse_init_items(Cursor &c, std::vector<InitSlot> &slots) {
  for (;;) {
    if (c.accept_punct("{")) {
      if (!c.accept_punct("}")) {
        parse_init_items(c, slots);
        c.expect_punct("}", "to close initializer");
      }
    } else if (c.accept_punct("&")) {
      slots.push_back({InitSlot::AddrOf, 0, c.expect_ident("after '&'")});
    } else if (c.accept_ident("null")) {
      slots.push_back({InitSlot::Int, 0, ""});
    } else {
      slots.push_back({InitSlot::Int, c.expect_num("in initializer"), ""});
    }
    if (!c.accept_punct(","))
      return;
  }
}

Instr parse_instr(Cursor &c) {
  Instr ins;
  ins.line = c.line();
  if (c.peek().kind == Token::Vreg) {
    ins.dst = c.next().text;
    c.expect_punct("=", "after destination register");
  }
  std::string op = c.expect_ident("as opcode");

  auto binary = [&](Opcode o) {
    ins.op = o;
    ins.args.push_back(c.expect_vreg("as first operand"));
    c.expect_punct(",", "between operands");
    ins.args.push_back(c.expect_vreg("as second operand"));
  };
  auto call_args = [&] {
    c.expect_punct("(", "before arguments");
    if (c.accept_punct(")"))
      return;
    for (;;) {
      ins.args.push_back(c.expect_vreg("as call argument"));
      if (c.accept_punct(")"))
        return;
      c.expect_punct(",", "between arguments");
    }
  };

  if (op == "const") {
    ins.op = Opcode::Const;
    ins.imm = c.expect_num("as constant value");
  } else if (op == "add") binary(Opcode::Add);
  else if (op == "sub") binary(Opcode::Sub);
  else if (op == "mul") binary(Opcode::Mul);
  else if (op == "eq") binary(Opcode::Eq);
  else if (op == "ne") binary(Opcode::Ne);
  else if (op == "lt") binary(Opcode::Lt);
  else if (op == "ge") binary(Opcode::Ge);
  else if (op == "load") {
    ins.op = Opcode::Load;
    ins.args.push_back(c.expect_vreg("as source pointer"));
  } else if (op == "store") {
    ins.op = Opcode::Store;
    ins.args.push_back(c.expect_vreg("as stored value"));
    c.expect_punct(",", "between value and pointer");
    ins.args.push_back(c.expect_vreg("as destination pointer"));
  } else if (op == "addr") {
    ins.op = Opcode::Addr;
    ins.sym = c.expect_ident("as global or function name");
  } else if (op == "field") {
    ins.op = Opcode::Field;
    ins.args.push_back(c.expect_vreg("as record pointer"));
    c.expect_punct(",", "before field index");
    ins.imm = c.expect_num("as field index");
  } else if (op == "elem") {
    ins.op = Opcode::Elem;
    ins.args.push_back(c.expect_vreg("as array pointer"));
    c.expect_punct(",", "before element index");
    ins.args.push_back(c.expect_vreg("as element index"));
  } else if (op == "call") {
    ins.op = Opcode::Call;
    ins.sym = c.expect_ident("as callee name");
    call_args();
  } else if (op == "icall") {
    ins.op = Opcode::Icall;
    ins.args.push_back(c.expect_vreg("as function pointer"));
    call_args();
  } else if (op == "cast") {
    ins.op = Opcode::Cast;
    ins.args.push_back(c.expect_vreg("as cast source"));
    c.expect_punct(",", "before target type");
    ins.type = parse_type(c);
  } else if (op == "local") {
    ins.op = Opcode::Local;
    ins.type = parse_type(c);
  } else if (op == "br") {
    ins.op = Opcode::Br;
    ins.args.push_back(c.expect_vreg("as branch condition"));
    c.expect_punct(",", "before true target");
    ins.sym = c.expect_ident("as true target");
    c.expect_punct(",", "before false target");
    ins.target2 = c.expect_ident("as false target");
  } else if (op == "jmp") {
    ins.op = Opcode::Jmp;
    ins.sym = c.expect_ident("as jump target");
  } else if (op == "ret") {
    ins.op = Opcode::Ret;
    if (!c.at_end())
      ins.args.push_back(c.expect_vreg("as return value"));
  } else if (op == "out") {
    ins.op = Opcode::Out;
    ins.args.push_back(c.expect_vreg("as output value"));
  } else if (op == "marker") {
    ins.op = Opcode::Marker;
    ins.sym = c.expect_ident("as marker name");
  } else {
    throw ParseError(c.line(), "unknown opcode '" + op + "'");
  }
  c.expect_end();
  return ins;
}

Program parse_structure(const std::vector<Line> &lines) {
  Program prog;
  Function *fn = nullptr;
  Block *block = nullptr;

  for (const auto &line : lines) {
    Cursor c(line);
    if (!fn) {
      if (c.accept_ident("record")) {
        std::string name = c.expect_ident("as record name");
        c.expect_punct("{", "after record name");
        std::vector<TypePtr> fields = parse_type_list(c, "}");
        if (fields.empty())
          throw ParseError(c.line(), "record must have at least one field");
        c.expect_end();
        prog.records.records.emplace_back(name, std::move(fields));
      } else if (c.accept_ident("global")) {
        GlobalDecl g;
        g.line = c.line();
        g.name = c.expect_ident("as global name");
        c.expect_punct(":", "after global name");
        g.type = parse_type(c);
        if (c.accept_punct("=")) {
          if (!c.accept_ident("zero"))
            parse_init_items(c, g.slots);
        }
        c.expect_end();
        prog.globals.push_back(std::move(g));
      } else if (c.accept_ident("extern")) {
        Function ext;
        ext.is_extern = true;
        ext.line = c.line();
        ext.name = c.expect_ident("as extern name");
        c.expect_punct(":", "after extern name");
        TypePtr sig = parse_type(c);
        c.expect_end();
        if (sig->kind != TypeKind::Fn)
          throw ParseError(line.number, "extern type must be a fn type");
        ext.ret = sig->ret;
        for (size_t i = 0; i < sig->params.size(); ++i)
          ext.params.push_back({"%arg" + std::to_string(i), sig->params[i]});
        prog.functions.push_back(std::move(ext));
      } else if (c.accept_ident("fn")) {
        Function f;
        f.line = c.line();
        f.name = c.expect_ident("as function name");
        c.expect_punct("(", "after function name");
        if (!c.accept_punct(")")) {
          for (;;) {
            Param p;
            p.name = c.expect_vreg("as parameter name");
            c.expect_punct(":", "after parameter name");
            p.type = parse_type(c);
            f.params.push_back(std::move(p));
            if (c.accept_punct(")"))
              break;
            c.expect_punct(",", "between parameters");
          }
        }
        if (c.accept_punct(":"))
          if (!c.accept_ident("void"))
            f.ret = parse_type(c);
        c.expect_punct("{", "to open function body");
        c.expect_end();
        prog.functions.push_back(std::move(f));
        fn = &prog.functions.back();
        block = nullptr;
      } else {
        throw ParseError(line.number, "expected a declaration");
      }
      continue;
    }

    // Inside a function body.
    if (c.accept_punct("}")) {
      c.expect_end();
      if (fn->blocks.empty())
        throw ParseError(line.number, "function '" + fn->name + "' has no blocks");
      fn = nullptr;
      block = nullptr;
      continue;
    }
    if (line.tokens.size() == 2 && line.tokens[0].kind == Token::Ident &&
        line.tokens[1].kind == Token::Punct && line.tokens[1].text == ":") {
      fn->blocks.push_back({line.tokens[0].text, {}});
      block = &fn->blocks.back();
      continue;
    }
    if (!block)
      throw ParseError(line.number, "instruction before first block label");
    block->instrs.push_back(parse_instr(c));
  }
  if (fn)
    throw ParseError(lines.empty() ? 1 : lines.back().number,
                     "unterminated function '" + fn->name + "'");
  return prog;
}

// ------------------------------------------------------------------------
// Validation
// ------------------------------------------------------------------------

class Validator {
public:
  Validator(const Program &prog, std::vector<Diagnostic> &diags)
      : prog_(prog), diags_(diags) {}

  void run() {
    check_records();
    check_globals();
    check_functions();
  }

private:
  const Program &prog_;
  std::vector<Diagnostic> &diags_;
  std::set<std::string> markers_;

  void error(int line, const std::string &msg) { diags_.push_back({line, msg}); }

  bool resolve_type(const TypePtr &t, int line) {
    try {
      type_size(t, prog_.records);
      type_encode(t, prog_.records);
    } catch (const ContractViolation &e) {
      error(line, e.what());
      return false;
    }
    return true;
  }

  void check_records() {
    std::set<std::string> seen;
    for (const auto &[name, fields] : prog_.records.records) {
      if (!seen.insert(name).second)
        error(1, "duplicate record '" + name + "'");
      for (const auto &f : fields)
        resolve_type(f, 1);
      resolve_type(make_rec_name(name), 1);
    }
  }

  void check_globals() {
    std::set<std::string> seen;
    for (const auto &g : prog_.globals) {
      if (!seen.insert(g.name).second)
        error(g.line, "duplicate global '" + g.name + "'");
      if (prog_.find_function(g.name))
        error(g.line, "global '" + g.name + "' collides with a function");
      if (!resolve_type(g.type, g.line))
        continue;
      auto slot_types = flatten_slots(g.type, prog_.records);
      if (!g.slots.empty() && g.slots.size() != slot_types.size()) {
        error(g.line, "initializer has " + std::to_string(g.slots.size()) +
                          " slots, type needs " +
                          std::to_string(slot_types.size()));
        continue;
      }
      for (size_t i = 0; i < g.slots.size(); ++i)
        check_init_slot(g, g.slots[i], slot_types[i]);
    }
  }

  void check_init_slot(const GlobalDecl &g, const InitSlot &slot,
                       const TypePtr &want) {
    if (slot.kind == InitSlot::Int) {
      if (is_pointer(want) && slot.value != 0)
        error(g.line, "pointer slot initializer must be null or an address");
      return;
    }
    if (!is_pointer(want)) {
      error(g.line, "address initializer in non-pointer slot");
      return;
    }
    TypePtr actual;
    if (const auto *target = prog_.find_global(slot.ref))
      actual = make_ptr(target->type);
    else if (const auto *f = prog_.find_function(slot.ref))
      actual = make_ptr(f->signature());
    else {
      error(g.line, "initializer references unknown name '" + slot.ref + "'");
      return;
    }
    if (!type_equal(actual, want, prog_.records))
      error(g.line, "initializer &" + slot.ref + " has type " +
                        type_print(actual) + ", slot needs " + type_print(want));
  }

  void check_functions() {
    std::set<std::string> seen;
    for (const auto &f : prog_.functions) {
      if (!seen.insert(f.name).second)
        error(f.line, "duplicate function '" + f.name + "'");
      if (f.params.size() > 8)
        error(f.line, "more than 8 parameters");
      for (const auto &p : f.params)
        resolve_type(p.type, f.line);
      if (f.ret)
        resolve_type(f.ret, f.line);
      if (!f.is_extern)
        check_body(f);
    }
  }

  void check_body(const Function &f) {
    std::set<std::string> labels;
    for (const auto &b : f.blocks) {
      if (!labels.insert(b.label).second)
        error(f.line, "duplicate block label '" + b.label + "'");
      if (b.instrs.empty()) {
        error(f.line, "empty block '" + b.label + "'");
        continue;
      }
      for (size_t i = 0; i < b.instrs.size(); ++i) {
        const Instr &ins = b.instrs[i];
        bool terminator = ins.op == Opcode::Br || ins.op == Opcode::Jmp ||
                          ins.op == Opcode::Ret;
        if (terminator != (i + 1 == b.instrs.size()))
          error(ins.line, terminator ? "terminator before end of block"
                                     : "block does not end in a terminator");
      }
    }
    auto target_ok = [&](const std::string &l) { return labels.count(l) > 0; };

    std::map<std::string, TypePtr> env;
    for (const auto &p : f.params) {
      if (env.count(p.name))
        error(f.line, "duplicate parameter '" + p.name + "'");
      env[p.name] = p.type;
    }

    for (const auto &b : f.blocks)
      for (const auto &ins : b.instrs)
        check_instr(f, ins, env, target_ok);
  }

  TypePtr use(const std::map<std::string, TypePtr> &env, const std::string &v,
              int line) {
    auto it = env.find(v);
    if (it == env.end()) {
      error(line, "use of undefined register " + v);
      return nullptr;
    }
    return it->second;
  }

  void define(std::map<std::string, TypePtr> &env, const Instr &ins,
              const TypePtr &type) {
    if (ins.dst.empty() || !type)
      return;
    auto it = env.find(ins.dst);
    if (it != env.end() && !type_equal(it->second, type, prog_.records)) {
      error(ins.line, "register " + ins.dst + " redefined with type " +
                          type_print(type) + ", was " + type_print(it->second));
      return;
    }
    env[ins.dst] = type;
  }

  void want_i64(const TypePtr &t, int line, const char *what) {
    if (t && !is_int64(t))
      error(line, std::string(what) + " must be i64, got " + type_print(t));
  }

  void check_call_shape(const Instr &ins, const TypePtr &sig,
                        std::map<std::string, TypePtr> &env, size_t first_arg) {
    size_t argc = ins.args.size() - first_arg;
    if (argc != sig->params.size()) {
      error(ins.line, "call passes " + std::to_string(argc) + " arguments, " +
                          "callee takes " + std::to_string(sig->params.size()));
      return;
    }
    for (size_t i = 0; i < argc; ++i) {
      TypePtr at = use(env, ins.args[first_arg + i], ins.line);
      if (at && !type_equal(at, sig->params[i], prog_.records))
        error(ins.line, "argument " + std::to_string(i) + " has type " +
                            type_print(at) + ", callee expects " +
                            type_print(sig->params[i]));
    }
    if (sig->ret) {
      if (ins.dst.empty())
        error(ins.line, "result of non-void call must be bound");
      else
        define(env, ins, sig->ret);
    } else if (!ins.dst.empty()) {
      error(ins.line, "void call cannot bind a result");
    }
  }

  void check_instr(const Function &f, const Instr &ins,
                   std::map<std::string, TypePtr> &env,
                   const std::function<bool(const std::string &)> &target_ok) {
    switch (ins.op) {
    case Opcode::Const:
      define(env, ins, make_int(64));
      break;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::Eq:
    case Opcode::Ne:
    case Opcode::Lt:
    case Opcode::Ge:
      want_i64(use(env, ins.args[0], ins.line), ins.line, "operand");
      want_i64(use(env, ins.args[1], ins.line), ins.line, "operand");
      define(env, ins, make_int(64));
      break;
    case Opcode::Load: {
      TypePtr p = use(env, ins.args[0], ins.line);
      if (!p)
        break;
      if (!is_pointer(p) || is_code_pointer(p)) {
        error(ins.line, "load needs a data pointer, got " + type_print(p));
        break;
      }
      if (!is_scalar(p->pointee)) {
        error(ins.line, "cannot load aggregate " + type_print(p->pointee));
        break;
      }
      define(env, ins, p->pointee);
      break;
    }
    case Opcode::Store: {
      TypePtr v = use(env, ins.args[0], ins.line);
      TypePtr p = use(env, ins.args[1], ins.line);
      if (!v || !p)
        break;
      if (!is_pointer(p) || is_code_pointer(p)) {
        error(ins.line, "store needs a data pointer, got " + type_print(p));
        break;
      }
      if (!is_scalar(p->pointee)) {
        error(ins.line, "cannot store aggregate " + type_print(p->pointee));
        break;
      }
      if (!type_equal(v, p->pointee, prog_.records))
        error(ins.line, "storing " + type_print(v) + " into slot of type " +
                            type_print(p->pointee));
      break;
    }
    case Opcode::Addr: {
      if (const auto *g = prog_.find_global(ins.sym))
        define(env, ins, make_ptr(g->type));
      else if (const auto *fd = prog_.find_function(ins.sym))
        define(env, ins, make_ptr(fd->signature()));
      else
        error(ins.line, "addr of unknown name '" + ins.sym + "'");
      break;
    }
    case Opcode::Field: {
      TypePtr p = use(env, ins.args[0], ins.line);
      if (!p)
        break;
      const std::vector<TypePtr> *fields = nullptr;
      if (is_pointer(p)) {
        const TypePtr &pt = p->pointee;
        if (pt->kind == TypeKind::Rec)
          fields = &pt->fields;
        else if (pt->kind == TypeKind::RecName)
          fields = prog_.records.find(pt->rec_name);
      }
      if (!fields) {
        error(ins.line, "field needs a record pointer, got " + type_print(p));
        break;
      }
      if (ins.imm < 0 || static_cast<size_t>(ins.imm) >= fields->size()) {
        error(ins.line, "field index out of range");
        break;
      }
      define(env, ins, make_ptr((*fields)[static_cast<size_t>(ins.imm)]));
      break;
    }
    case Opcode::Elem: {
      TypePtr p = use(env, ins.args[0], ins.line);
      want_i64(use(env, ins.args[1], ins.line), ins.line, "element index");
      if (!p)
        break;
      if (!is_pointer(p) || p->pointee->kind != TypeKind::Arr) {
        error(ins.line, "elem needs an array pointer, got " + type_print(p));
        break;
      }
      define(env, ins, make_ptr(p->pointee->elem));
      break;
    }
    case Opcode::Call: {
      const Function *callee = prog_.find_function(ins.sym);
      if (!callee) {
        error(ins.line, "call to unknown function '" + ins.sym + "'");
        break;
      }
      check_call_shape(ins, callee->signature(), env, 0);
      break;
    }
    case Opcode::Icall: {
      TypePtr p = use(env, ins.args[0], ins.line);
      if (!p)
        break;
      if (!is_code_pointer(p)) {
        error(ins.line, "icall needs a function pointer, got " + type_print(p));
        break;
      }
      check_call_shape(ins, p->pointee, env, 1);
      break;
    }
    case Opcode::Cast: {
      TypePtr s = use(env, ins.args[0], ins.line);
      if (s && !is_pointer(s))
        error(ins.line, "cast source must be a pointer, got " + type_print(s));
      if (!is_pointer(ins.type))
        error(ins.line, "cast target must be a pointer type");
      else if (resolve_type(ins.type, ins.line))
        define(env, ins, ins.type);
      break;
    }
    case Opcode::Local:
      if (resolve_type(ins.type, ins.line))
        define(env, ins, make_ptr(ins.type));
      break;
    case Opcode::Br:
      want_i64(use(env, ins.args[0], ins.line), ins.line, "branch condition");
      if (!target_ok(ins.sym))
        error(ins.line, "unknown branch target '" + ins.sym + "'");
      if (!target_ok(ins.target2))
        error(ins.line, "unknown branch target '" + ins.target2 + "'");
      break;
    case Opcode::Jmp:
      if (!target_ok(ins.sym))
        error(ins.line, "unknown jump target '" + ins.sym + "'");
      break;
    case Opcode::Ret:
      if (f.ret) {
        if (ins.args.empty())
          error(ins.line, "missing return value");
        else {
          TypePtr t = use(env, ins.args[0], ins.line);
          if (t && !type_equal(t, f.ret, prog_.records))
            error(ins.line, "returning " + type_print(t) + " from function of " +
                                type_print(f.ret));
        }
      } else if (!ins.args.empty()) {
        error(ins.line, "void function cannot return a value");
      }
      break;
    case Opcode::Out:
      want_i64(use(env, ins.args[0], ins.line), ins.line, "out operand");
      break;
    case Opcode::Marker:
      if (!markers_.insert(ins.sym).second)
        error(ins.line, "duplicate marker '" + ins.sym + "'");
      break;
    }
  }
};

} // namespace

ParseResult parse(const std::string &source) {
  ParseResult result;
  Program prog;
  try {
    prog = parse_structure(lex(source));
  } catch (const ParseError &e) {
    result.diagnostics.push_back({e.line, e.what()});
    return result;
  }
  Validator(prog, result.diagnostics).run();
  if (result.diagnostics.empty())
    result.program = std::move(prog);
  return result;
}

std::map<std::string, TypePtr> vreg_types(const Function &fn,
                                          const Program &program) {
  std::map<std::string, TypePtr> env;
  for (const auto &p : fn.params)
    env[p.name] = p.type;
  for (const auto &b : fn.blocks) {
    for (const auto &ins : b.instrs) {
      if (ins.dst.empty())
        continue;
      switch (ins.op) {
      case Opcode::Const:
      case Opcode::Add:
      case Opcode::Sub:
      case Opcode::Mul:
      case Opcode::Eq:
      case Opcode::Ne:
      case Opcode::Lt:
      case Opcode::Ge:
        env[ins.dst] = make_int(64);
        break;
      case Opcode::Load:
        env[ins.dst] = env.at(ins.args[0])->pointee;
        break;
      case Opcode::Addr:
        if (const auto *g = program.find_global(ins.sym))
          env[ins.dst] = make_ptr(g->type);
        else
          env[ins.dst] = make_ptr(program.find_function(ins.sym)->signature());
        break;
      case Opcode::Field: {
        const TypePtr &pt = env.at(ins.args[0])->pointee;
        const std::vector<TypePtr> &fields =
            pt->kind == TypeKind::Rec ? pt->fields
                                      : *program.records.find(pt->rec_name);
        env[ins.dst] = make_ptr(fields[static_cast<size_t>(ins.imm)]);
        break;
      }
      case Opcode::Elem:
        env[ins.dst] = make_ptr(env.at(ins.args[0])->pointee->elem);
        break;
      case Opcode::Call:
        env[ins.dst] = program.find_function(ins.sym)->ret;
        break;
      case Opcode::Icall:
        env[ins.dst] = env.at(ins.args[0])->pointee->ret;
        break;
      case Opcode::Cast:
      case Opcode::Local:
        env[ins.dst] = ins.op == Opcode::Local ? make_ptr(ins.type) : ins.type;
        break;
      default:
        break;
      }
    }
  }
  return env;
}

// ------------------------------------------------------------------------
// Printing
// ------------------------------------------------------------------------

namespace {

void print_init(const GlobalDecl &g, std::string &out) {
  bool all_zero = true;
  for (const auto &s : g.slots)
    if (s.kind != InitSlot::Int || s.value != 0)
      all_zero = false;
  if (g.slots.empty() || all_zero) {
    out += " = zero";
    return;
  }
  auto slot_str = [](const InitSlot &s, bool pointer_slot) {
    if (s.kind == InitSlot::AddrOf)
      return "&" + s.ref;
    if (pointer_slot && s.value == 0)
      return std::string("null");
    return std::to_string(s.value);
  };
  if (g.slots.size() == 1) {
    out += " = " + slot_str(g.slots[0], is_pointer(g.type));
    return;
  }
  out += " = { ";
  for (size_t i = 0; i < g.slots.size(); ++i) {
    if (i)
      out += ", ";
    out += slot_str(g.slots[i], false);
  }
  out += " }";
}

void print_instr(const Instr &ins, std::string &out) {
  out += "  ";
  if (!ins.dst.empty()) {
    out += ins.dst;
    out += " = ";
  }
  out += opcode_name(ins.op);
  switch (ins.op) {
  case Opcode::Const:
    out += " " + std::to_string(ins.imm);
    break;
  case Opcode::Add:
  case Opcode::Sub:
  case Opcode::Mul:
  case Opcode::Eq:
  case Opcode::Ne:
  case Opcode::Lt:
  case Opcode::Ge:
  case Opcode::Elem:
    out += " " + ins.args[0] + ", " + ins.args[1];
    break;
  case Opcode::Load:
  case Opcode::Out:
    out += " " + ins.args[0];
    break;
  case Opcode::Store:
    out += " " + ins.args[0] + ", " + ins.args[1];
    break;
  case Opcode::Addr:
  case Opcode::Jmp:
  case Opcode::Marker:
    out += " " + ins.sym;
    break;
  case Opcode::Field:
    out += " " + ins.args[0] + ", " + std::to_string(ins.imm);
    break;
  case Opcode::Call:
  case Opcode::Icall: {
    size_t first = ins.op == Opcode::Call ? 0 : 1;
    out += " " + (ins.op == Opcode::Call ? ins.sym : ins.args[0]) + "(";
    for (size_t i = first; i < ins.args.size(); ++i) {
      if (i > first)
        out += ", ";
      out += ins.args[i];
    }
    out += ")";
    break;
  }
  case Opcode::Cast:
    out += " " + ins.args[0] + ", " + type_print(ins.type);
    break;
  case Opcode::Local:
    out += " " + type_print(ins.type);
    break;
  case Opcode::Br:
    out += " " + ins.args[0] + ", " + ins.sym + ", " + ins.target2;
    break;
  case Opcode::Ret:
    if (!ins.args.empty())
      out += " " + ins.args[0];
    break;
  }
  out += '\n';
}

} // namespace

std::string print(const Program &program) {
  std::string out;
  for (const auto &[name, fields] : program.records.records) {
    out += "record " + name + " { ";
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i)
        out += ", ";
      out += type_print(fields[i]);
    }
    out += " }\n";
  }
  if (!program.records.records.empty())
    out += '\n';

  for (const auto &g : program.globals) {
    out += "global " + g.name + " : " + type_print(g.type);
    print_init(g, out);
    out += '\n';
  }
  if (!program.globals.empty())
    out += '\n';

  bool first = true;
  for (const auto &f : program.functions) {
    if (!first)
      out += '\n';
    first = false;
    if (f.is_extern) {
      out += "extern " + f.name + " : " + type_print(f.signature()) + "\n";
      continue;
    }
    out += "fn " + f.name + "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i)
        out += ", ";
      out += f.params[i].name + " : " + type_print(f.params[i].type);
    }
    out += ")";
    if (f.ret)
      out += " : " + type_print(f.ret);
    out += " {\n";
    for (const auto &b : f.blocks) {
      out += b.label + ":\n";
      for (const auto &ins : b.instrs)
        print_instr(ins, out);
    }
    out += "}\n";
  }
  return out;
}

} // namespace partsforge::tir
