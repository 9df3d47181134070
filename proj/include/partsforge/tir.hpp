//===-- tir.hpp - Tiny typed IR ---------------------------------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A small typed intermediate representation. Programs are a list of record
// declarations, globals and functions; function bodies are labelled blocks of
// three-address instructions over virtual registers. Every scalar value
// (integer, float slot, pointer) occupies one 8-byte slot; records and arrays
// are slot sequences. The type language is structural, and every type has a
// canonical string encoding whose SHA3-256 prefix is its 64-bit type-id.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "partsforge/diag.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace partsforge::tir {

using partsforge::Diagnostic;

// -------------------------------------------------------------------------
// Types
// -------------------------------------------------------------------------

enum class TypeKind {
  Int,     ///< i8, i16, i32, i64 (storage width tag; all slots are 8 bytes)
  Float,   ///< f32, f64
  Ptr,     ///< p(T)
  Fn,      ///< fn(ret|params); ret may be void
  Rec,     ///< anonymous structural record rec(T1,...)
  RecName, ///< reference to a named record declaration
  Arr,     ///< arr(T, n)
};

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  TypeKind kind;
  unsigned width = 0;             // Int/Float
  TypePtr pointee;                // Ptr
  TypePtr ret;                    // Fn; nullptr means void
  std::vector<TypePtr> params;    // Fn
  std::vector<TypePtr> fields;    // Rec
  std::string rec_name;           // RecName
  TypePtr elem;                   // Arr
  uint64_t length = 0;            // Arr
};

TypePtr make_int(unsigned width);
TypePtr make_float(unsigned width);
TypePtr make_ptr(TypePtr pointee);
TypePtr make_fn(TypePtr ret, std::vector<TypePtr> params);
TypePtr make_rec(std::vector<TypePtr> fields);
TypePtr make_rec_name(std::string name);
TypePtr make_arr(TypePtr elem, uint64_t length);

/// Named record declarations, in declaration order.
struct RecordTable {
  std::vector<std::pair<std::string, std::vector<TypePtr>>> records;

  const std::vector<TypePtr> *find(const std::string &name) const;
};

/// Canonical structural encoding. Named records are expanded in place; a
/// reference back to the k-th enclosing record expansion (0 = innermost) is
/// rendered as "^k", which keeps the encoding finite and injective for
/// recursive records. Two types are identical exactly when their encodings
/// are byte-equal.
std::string type_encode(const TypePtr &t, const RecordTable &records);

/// SHA3-256 of the canonical encoding, truncated to the first 8 bytes
/// (big-endian). This is the modifier value used by the pointer schemes.
uint64_t type_id(const TypePtr &t, const RecordTable &records);

bool type_equal(const TypePtr &a, const TypePtr &b, const RecordTable &records);

/// Storage size in bytes: scalars and pointers take one 8-byte slot, records
/// the sum of their fields, arrays length * element size. Throws
/// ContractViolation for by-value recursive records.
uint64_t type_size(const TypePtr &t, const RecordTable &records);

/// Scalar slot types of `t` in layout order (a scalar yields itself).
std::vector<TypePtr> flatten_slots(const TypePtr &t, const RecordTable &records);

/// Source spelling of a type (record names preserved, not expanded).
std::string type_print(const TypePtr &t);

bool is_scalar(const TypePtr &t);
bool is_int64(const TypePtr &t);
bool is_pointer(const TypePtr &t);
bool is_code_pointer(const TypePtr &t); ///< p(fn(...))
bool is_data_pointer(const TypePtr &t); ///< pointer but not to a function

// -------------------------------------------------------------------------
// Instructions
// -------------------------------------------------------------------------

enum class Opcode {
  Const, Add, Sub, Mul, Eq, Ne, Lt, Ge,
  Load, Store, Addr, Field, Elem,
  Call, Icall, Cast, Local,
  Br, Jmp, Ret, Out, Marker,
};

const char *opcode_name(Opcode op);

struct Instr {
  Opcode op;
  std::string dst;               ///< destination vreg ("" if none)
  std::vector<std::string> args; ///< vreg operands (call args after callee)
  int64_t imm = 0;               ///< Const value, Field index
  std::string sym;               ///< global/function/jump-target/marker name
  std::string target2;           ///< Br false-target
  TypePtr type;                  ///< Cast target type, Local slot type
  int line = 0;
};

struct Block {
  std::string label;
  std::vector<Instr> instrs;
};

struct Param {
  std::string name; ///< vreg name, with leading '%'
  TypePtr type;
};

struct Function {
  std::string name;
  std::vector<Param> params;
  TypePtr ret; ///< nullptr for void
  std::vector<Block> blocks;
  bool is_extern = false;
  int line = 0;

  /// fn(ret|params) signature type.
  TypePtr signature() const;
  /// True if the body contains no call or icall.
  bool is_leaf() const;
};

/// One flattened 8-byte initializer slot of a global.
struct InitSlot {
  enum Kind { Int, AddrOf } kind = Int;
  int64_t value = 0; ///< Int payload (0 prints as null in pointer slots)
  std::string ref;   ///< AddrOf target (global or function name)
};

struct GlobalDecl {
  std::string name;
  TypePtr type;
  std::vector<InitSlot> slots; ///< type_size / 8 entries
  int line = 0;
};

struct Program {
  RecordTable records;
  std::vector<GlobalDecl> globals;
  std::vector<Function> functions; ///< externs included

  const Function *find_function(const std::string &name) const;
  const GlobalDecl *find_global(const std::string &name) const;
  bool has_externs() const;
};

// -------------------------------------------------------------------------
// Parsing, validation, printing
// -------------------------------------------------------------------------

struct ParseResult {
  std::optional<Program> program; ///< engaged iff diagnostics is empty
  std::vector<Diagnostic> diagnostics;
};

/// Parses and validates. On any error the program is absent and at least one
/// diagnostic (with 1-based source line) is present. Validation covers name
/// resolution, operand types, block structure, initializer shapes, by-value
/// record recursion and the 8-argument call limit.
ParseResult parse(const std::string &source);

/// Canonical text form. parse(print(p)) reproduces print-identical output.
std::string print(const Program &program);

/// Per-vreg static types of a validated function body, keyed by vreg name.
/// Parameters are included. Recomputed on demand; parse() guarantees this
/// succeeds for programs it returns.
std::map<std::string, TypePtr> vreg_types(const Function &fn,
                                          const Program &program);

} // namespace partsforge::tir
