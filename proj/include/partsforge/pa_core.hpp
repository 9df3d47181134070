//===-- pa_core.hpp - Pointer authentication primitives ---------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Software model of ARMv8.3-A style pointer authentication: a truncated
// tweakable MAC over (pointer, 64-bit modifier) is folded into the unused
// high bits of a canonical virtual address. Five 128-bit keys are modelled
// (IA, IB, DA, DB, GA). Authentication failure does not trap in place;
// instead the pointer is rewritten with a key-class specific failure code in
// the PAC field so that a later dereference or branch faults.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace partsforge {

/// Thrown when a caller breaks an API precondition, e.g. signing a pointer
/// that is not in canonical form.
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string &what) : std::logic_error(what) {}
};

/// Virtual address space shape. The PAC field occupies the non-address bits:
/// with pointer tagging disabled everything above the address except bit 63,
/// with tagging enabled everything between the tag byte (bits 63:56, plus the
/// reserved extension bit 55) and the address.
struct VaConfig {
  unsigned va_bits = 39;
  bool tagging = false;

  VaConfig() = default;
  VaConfig(unsigned va, bool tag);

  /// Width of the PAC field in bits. Guaranteed to be in [3, 31].
  unsigned pac_bits() const {
    return tagging ? 64 - va_bits - 9 : 64 - va_bits - 1;
  }

  /// Lowest bit of the PAC field (== va_bits).
  unsigned pac_shift() const { return va_bits; }

  /// Mask selecting the PAC field in a 64-bit pointer.
  uint64_t pac_field_mask() const {
    return ((uint64_t{1} << pac_bits()) - 1) << pac_shift();
  }

  /// Mask selecting the address bits.
  uint64_t addr_mask() const { return (uint64_t{1} << va_bits) - 1; }

  /// Mask of bits a canonical (unsigned, untagged-extension) pointer may
  /// carry: address bits, plus the tag byte when tagging is enabled.
  uint64_t canonical_mask() const {
    return tagging ? addr_mask() | 0xFF00'0000'0000'0000ULL : addr_mask();
  }

  bool is_canonical(uint64_t ptr) const { return (ptr & ~canonical_mask()) == 0; }
};

struct Key128 {
  uint64_t hi = 0;
  uint64_t lo = 0;
  friend bool operator==(const Key128 &, const Key128 &) = default;
};

enum class KeyId : uint8_t { IA = 0, IB = 1, DA = 2, DB = 3, GA = 4 };

constexpr bool is_instruction_key(KeyId k) {
  return k == KeyId::IA || k == KeyId::IB;
}
constexpr bool is_data_key(KeyId k) { return k == KeyId::DA || k == KeyId::DB; }

const char *key_name(KeyId k);

/// The five PA keys. In the VM these live in privileged state; user
/// instructions can use them only implicitly through sign/authenticate.
struct KeySet {
  Key128 keys[5];

  Key128 &operator[](KeyId id) { return keys[static_cast<size_t>(id)]; }
  const Key128 &operator[](KeyId id) const {
    return keys[static_cast<size_t>(id)];
  }

  /// Derives all five keys deterministically from a seed.
  static KeySet generate(uint64_t seed);
};

/// Keyed tweakable MAC interface. The default implementation is ToyMac; the
/// cipher is pluggable so a stronger primitive can be swapped in without
/// touching the signing logic.
class TweakableMac {
public:
  virtual ~TweakableMac() = default;
  virtual uint64_t mac64(uint64_t ptr, uint64_t modifier,
                         const Key128 &key) const = 0;
  virtual const char *name() const = 0;
};

/// Two-round mixer built from the 64-bit murmur finalizer:
///   F(F(ptr ^ key_lo) ^ modifier ^ key_hi)
/// Not cryptographically strong; chosen for speed and reproducibility. Its
/// avalanche behaviour is good enough that truncations behave like uniform
/// tags, which is all the guessing-entropy analysis needs.
class ToyMac final : public TweakableMac {
public:
  uint64_t mac64(uint64_t ptr, uint64_t modifier,
                 const Key128 &key) const override;
  const char *name() const override { return "toymac"; }

  static uint64_t fmix64(uint64_t x);
};

const TweakableMac &default_mac();

/// Truncated PAC for a canonical pointer: low pac_bits of the MAC.
/// Throws ContractViolation if `ptr` is not canonical under `cfg`.
uint64_t pac_compute(uint64_t ptr, uint64_t modifier, const Key128 &key,
                     const VaConfig &cfg,
                     const TweakableMac &mac = default_mac());

/// Embeds the PAC into the pointer's PAC field. Input must be canonical.
uint64_t sign(uint64_t ptr, uint64_t modifier, const Key128 &key,
              const VaConfig &cfg, const TweakableMac &mac = default_mac());

/// Removes the PAC field, recovering the canonical pointer.
uint64_t strip(uint64_t ptr, const VaConfig &cfg);

struct AuthResult {
  uint64_t value = 0; ///< Canonical pointer on success, failure-coded on error.
  bool ok = false;
};

/// Verifies a signed pointer. On success returns the stripped canonical
/// pointer. On failure returns the stripped pointer with a failure code in
/// the PAC field: 0b01 << (pac_bits - 2) for instruction keys, 0b10 for data
/// keys. Such a value is non-canonical, so a later load, store or branch
/// through it raises a translation fault.
AuthResult authenticate(uint64_t signed_ptr, uint64_t modifier, KeyId key_id,
                        const Key128 &key, const VaConfig &cfg,
                        const TweakableMac &mac = default_mac());

/// Failure-code form of a pointer, as produced by a failed authenticate.
uint64_t auth_failure_encode(uint64_t stripped, KeyId key_id,
                             const VaConfig &cfg);

/// True if `ptr` carries exactly an instruction- or data-class failure code
/// in its PAC field. Used to classify faults as PA detections.
bool is_auth_failure_coded(uint64_t ptr, const VaConfig &cfg);

/// pacga analogue: full 64-bit MAC with the low 32 bits cleared. Unlike
/// sign(), the input is any 64-bit value, not a pointer.
uint64_t generic_mac(uint64_t value, uint64_t modifier, const Key128 &key,
                     const TweakableMac &mac = default_mac());

/// Component-qualified spelling (pa::VaConfig, pa::KeySet, ...) for files
/// that mix several partsforge namespaces.
namespace pa = ::partsforge;

} // namespace partsforge
