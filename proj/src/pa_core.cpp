//===-- pa_core.cpp - Pointer authentication primitives -------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/pa_core.hpp"

#include <random>

namespace partsforge {

VaConfig::VaConfig(unsigned va, bool tag) : va_bits(va), tagging(tag) {
  if (va_bits < 36 || va_bits > 52)
    throw std::invalid_argument("va_bits must be in [36, 52]");
  unsigned reserved = tagging ? 9 : 1;
  unsigned b = 64 - va_bits - reserved;
  if (b < 3 || b > 31)
    throw std::invalid_argument("PAC width out of range [3, 31]");
}

const char *key_name(KeyId k) {
  switch (k) {
  case KeyId::IA: return "IA";
  case KeyId::IB: return "IB";
  case KeyId::DA: return "DA";
  case KeyId::DB: return "DB";
  case KeyId::GA: return "GA";
  }
  return "?";
}

KeySet KeySet::generate(uint64_t seed) {
  std::mt19937_64 rng(seed);
  KeySet ks;
  for (auto &k : ks.keys) {
    k.hi = rng();
    k.lo = rng();
  }
  return ks;
}

uint64_t ToyMac::fmix64(uint64_t x) {
  x ^= x >> 33;
  x *= 0xFF51AFD7ED558CCDULL;
  x ^= x >> 29;
  x *= 0xC4CEB9FE1A85EC53ULL;
  x ^= x >> 32;
  return x;
}

uint64_t ToyMac::mac64(uint64_t ptr, uint64_t modifier,
                       const Key128 &key) const {
  return fmix64(fmix64(ptr ^ key.lo) ^ modifier ^ key.hi);
}

const TweakableMac &default_mac() {
  static const ToyMac mac;
  return mac;
}

uint64_t pac_compute(uint64_t ptr, uint64_t modifier, const Key128 &key,
                     const VaConfig &cfg, const TweakableMac &mac) {
  if (!cfg.is_canonical(ptr))
    throw ContractViolation("pac_compute: pointer not canonical");
  uint64_t full = mac.mac64(ptr, modifier, key);
  return full & ((uint64_t{1} << cfg.pac_bits()) - 1);
}

uint64_t sign(uint64_t ptr, uint64_t modifier, const Key128 &key,
              const VaConfig &cfg, const TweakableMac &mac) {
  uint64_t pac = pac_compute(ptr, modifier, key, cfg, mac);
  return ptr | (pac << cfg.pac_shift());
}

uint64_t strip(uint64_t ptr, const VaConfig &cfg) {
  return ptr & cfg.canonical_mask();
}

uint64_t auth_failure_encode(uint64_t stripped, KeyId key_id,
                             const VaConfig &cfg) {
  uint64_t code = is_data_key(key_id) ? 0b10u : 0b01u;
  return stripped | (code << (cfg.pac_bits() - 2)) << cfg.pac_shift();
}

AuthResult authenticate(uint64_t signed_ptr, uint64_t modifier, KeyId key_id,
                        const Key128 &key, const VaConfig &cfg,
                        const TweakableMac &mac) {
  uint64_t stripped = strip(signed_ptr, cfg);
  // Success iff the pointer is bit-for-bit the signed form: a perturbation
  // anywhere, including outside the PAC field, fails authentication.
  if (sign(stripped, modifier, key, cfg, mac) == signed_ptr)
    return {stripped, true};
  return {auth_failure_encode(stripped, key_id, cfg), false};
}

bool is_auth_failure_coded(uint64_t ptr, const VaConfig &cfg) {
  uint64_t field = (ptr & cfg.pac_field_mask()) >> cfg.pac_shift();
  uint64_t instr = uint64_t{0b01} << (cfg.pac_bits() - 2);
  uint64_t data = uint64_t{0b10} << (cfg.pac_bits() - 2);
  return field == instr || field == data;
}

uint64_t generic_mac(uint64_t value, uint64_t modifier, const Key128 &key,
                     const TweakableMac &mac) {
  return mac.mac64(value, modifier, key) & 0xFFFFFFFF00000000ULL;
}

} // namespace partsforge
