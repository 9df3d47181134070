//===-- tir_types.cpp - Structural types, encodings, type-ids -------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/pa_core.hpp"
#include "partsforge/sha3.hpp"
#include "partsforge/tir.hpp"

#include <algorithm>

namespace partsforge::tir {

TypePtr make_int(unsigned width) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Int;
  t->width = width;
  return t;
}

TypePtr make_float(unsigned width) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Float;
  t->width = width;
  return t;
}

TypePtr make_ptr(TypePtr pointee) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Ptr;
  t->pointee = std::move(pointee);
  return t;
}

TypePtr make_fn(TypePtr ret, std::vector<TypePtr> params) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Fn;
  t->ret = std::move(ret);
  t->params = std::move(params);
  return t;
}

TypePtr make_rec(std::vector<TypePtr> fields) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Rec;
  t->fields = std::move(fields);
  return t;
}

TypePtr make_rec_name(std::string name) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::RecName;
  t->rec_name = std::move(name);
  return t;
}

TypePtr make_arr(TypePtr elem, uint64_t length) {
  auto t = std::make_shared<Type>();
  t->kind = TypeKind::Arr;
  t->elem = std::move(elem);
  t->length = length;
  return t;
}

const std::vector<TypePtr> *RecordTable::find(const std::string &name) const {
  for (const auto &[n, fields] : records)
    if (n == name)
      return &fields;
  return nullptr;
}

namespace {

// `stack` holds the names of record expansions currently in progress,
// innermost last. Anonymous records push an empty name so that back-reference
// indices count every enclosing rec(...) uniformly.
void encode_rec(const TypePtr &t, const RecordTable &records,
                std::vector<std::string> &stack, std::string &out) {
  switch (t->kind) {
  case TypeKind::Int:
    out += 'i';
    out += std::to_string(t->width);
    return;
  case TypeKind::Float:
    out += 'f';
    out += std::to_string(t->width);
    return;
  case TypeKind::Ptr:
    out += "p(";
    encode_rec(t->pointee, records, stack, out);
    out += ')';
    return;
  case TypeKind::Fn:
    out += "fn(";
    if (t->ret)
      encode_rec(t->ret, records, stack, out);
    else
      out += "void";
    out += '|';
    for (size_t i = 0; i < t->params.size(); ++i) {
      if (i)
        out += ',';
      encode_rec(t->params[i], records, stack, out);
    }
    out += ')';
    return;
  case TypeKind::Arr:
    out += "arr(";
    encode_rec(t->elem, records, stack, out);
    out += ',';
    out += std::to_string(t->length);
    out += ')';
    return;
  case TypeKind::Rec:
    stack.emplace_back();
    out += "rec(";
    for (size_t i = 0; i < t->fields.size(); ++i) {
      if (i)
        out += ',';
      encode_rec(t->fields[i], records, stack, out);
    }
    out += ')';
    stack.pop_back();
    return;
  case TypeKind::RecName: {
    for (size_t i = stack.size(); i-- > 0;) {
      if (stack[i] == t->rec_name) {
        out += '^';
        out += std::to_string(stack.size() - 1 - i);
        return;
      }
    }
    const auto *fields = records.find(t->rec_name);
    if (!fields)
      throw ContractViolation("unknown record: " + t->rec_name);
    stack.push_back(t->rec_name);
    out += "rec(";
    for (size_t i = 0; i < fields->size(); ++i) {
      if (i)
        out += ',';
      encode_rec((*fields)[i], records, stack, out);
    }
    out += ')';
    stack.pop_back();
    return;
  }
  }
}

uint64_t size_rec(const TypePtr &t, const RecordTable &records,
                  std::vector<std::string> &in_progress) {
  switch (t->kind) {
  case TypeKind::Int:
  case TypeKind::Float:
  case TypeKind::Ptr:
  case TypeKind::Fn:
    return 8;
  case TypeKind::Arr:
    return t->length * size_rec(t->elem, records, in_progress);
  case TypeKind::Rec: {
    uint64_t total = 0;
    for (const auto &f : t->fields)
      total += size_rec(f, records, in_progress);
    return total;
  }
  case TypeKind::RecName: {
    if (std::find(in_progress.begin(), in_progress.end(), t->rec_name) !=
        in_progress.end())
      throw ContractViolation("record " + t->rec_name +
                              " contains itself by value");
    const auto *fields = records.find(t->rec_name);
    if (!fields)
      throw ContractViolation("unknown record: " + t->rec_name);
    in_progress.push_back(t->rec_name);
    uint64_t total = 0;
    for (const auto &f : *fields)
      total += size_rec(f, records, in_progress);
    in_progress.pop_back();
    return total;
  }
  }
  return 0;
}

void flatten_rec(const TypePtr &t, const RecordTable &records,
                 std::vector<TypePtr> &out) {
  switch (t->kind) {
  case TypeKind::Int:
  case TypeKind::Float:
  case TypeKind::Ptr:
  case TypeKind::Fn:
    out.push_back(t);
    return;
  case TypeKind::Arr:
    for (uint64_t i = 0; i < t->length; ++i)
      flatten_rec(t->elem, records, out);
    return;
  case TypeKind::Rec:
    for (const auto &f : t->fields)
      flatten_rec(f, records, out);
    return;
  case TypeKind::RecName: {
    const auto *fields = records.find(t->rec_name);
    if (!fields)
      throw ContractViolation("unknown record: " + t->rec_name);
    for (const auto &f : *fields)
      flatten_rec(f, records, out);
    return;
  }
  }
}

} // namespace

std::string type_encode(const TypePtr &t, const RecordTable &records) {
  std::string out;
  std::vector<std::string> stack;
  encode_rec(t, records, stack, out);
  return out;
}

uint64_t type_id(const TypePtr &t, const RecordTable &records) {
  return sha3_256_prefix64(type_encode(t, records));
}

bool type_equal(const TypePtr &a, const TypePtr &b, const RecordTable &records) {
  if (a.get() == b.get())
    return true;
  return type_encode(a, records) == type_encode(b, records);
}

uint64_t type_size(const TypePtr &t, const RecordTable &records) {
  std::vector<std::string> in_progress;
  return size_rec(t, records, in_progress);
}

std::vector<TypePtr> flatten_slots(const TypePtr &t,
                                   const RecordTable &records) {
  std::vector<TypePtr> out;
  flatten_rec(t, records, out);
  return out;
}

std::string type_print(const TypePtr &t) {
  switch (t->kind) {
  case TypeKind::Int:
    return "i" + std::to_string(t->width);
  case TypeKind::Float:
    return "f" + std::to_string(t->width);
  case TypeKind::Ptr:
    return "p(" + type_print(t->pointee) + ")";
  case TypeKind::Fn: {
    std::string s = "fn(";
    s += t->ret ? type_print(t->ret) : "void";
    s += '|';
    for (size_t i = 0; i < t->params.size(); ++i) {
      if (i)
        s += ',';
      s += type_print(t->params[i]);
    }
    return s + ")";
  }
  case TypeKind::Rec: {
    std::string s = "rec(";
    for (size_t i = 0; i < t->fields.size(); ++i) {
      if (i)
        s += ',';
      s += type_print(t->fields[i]);
    }
    return s + ")";
  }
  case TypeKind::RecName:
    return t->rec_name;
  case TypeKind::Arr:
    return "arr(" + type_print(t->elem) + "," + std::to_string(t->length) + ")";
  }
  return "?";
}

bool is_scalar(const TypePtr &t) {
  switch (t->kind) {
  case TypeKind::Int:
  case TypeKind::Float:
  case TypeKind::Ptr:
    return true;
  default:
    return false;
  }
}

bool is_int64(const TypePtr &t) {
  return t->kind == TypeKind::Int && t->width == 64;
}

bool is_pointer(const TypePtr &t) { return t->kind == TypeKind::Ptr; }

bool is_code_pointer(const TypePtr &t) {
  return t->kind == TypeKind::Ptr && t->pointee->kind == TypeKind::Fn;
}

bool is_data_pointer(const TypePtr &t) {
  return t->kind == TypeKind::Ptr && t->pointee->kind != TypeKind::Fn;
}

const char *opcode_name(Opcode op) {
  switch (op) {
  case Opcode::Const: return "const";
  case Opcode::Add: return "add";
  case Opcode::Sub: return "sub";
  case Opcode::Mul: return "mul";
  case Opcode::Eq: return "eq";
  case Opcode::Ne: return "ne";
  case Opcode::Lt: return "lt";
  case Opcode::Ge: return "ge";
  case Opcode::Load: return "load";
  case Opcode::Store: return "store";
  case Opcode::Addr: return "addr";
  case Opcode::Field: return "field";
  case Opcode::Elem: return "elem";
  case Opcode::Call: return "call";
  case Opcode::Icall: return "icall";
  case Opcode::Cast: return "cast";
  case Opcode::Local: return "local";
  case Opcode::Br: return "br";
  case Opcode::Jmp: return "jmp";
  case Opcode::Ret: return "ret";
  case Opcode::Out: return "out";
  case Opcode::Marker: return "marker";
  }
  return "?";
}

TypePtr Function::signature() const {
  std::vector<TypePtr> ps;
  ps.reserve(params.size());
  for (const auto &p : params)
    ps.push_back(p.type);
  return make_fn(ret, std::move(ps));
}

bool Function::is_leaf() const {
  for (const auto &b : blocks)
    for (const auto &i : b.instrs)
      if (i.op == Opcode::Call || i.op == Opcode::Icall)
        return false;
  return true;
}

const Function *Program::find_function(const std::string &name) const {
  for (const auto &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

const GlobalDecl *Program::find_global(const std::string &name) const {
  for (const auto &g : globals)
    if (g.name == name)
      return &g;
  return nullptr;
}

bool Program::has_externs() const {
  for (const auto &f : functions)
    if (f.is_extern)
      return true;
  return false;
}

} // namespace partsforge::tir
