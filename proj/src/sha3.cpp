//===-- sha3.cpp - SHA3-256 -----------------------------------------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Minimal Keccak-f[1600] sponge, specialised to SHA3-256 (rate 136 bytes,
// 0x06 domain padding). Verified against NIST test vectors in the unit tests.
//
//===----------------------------------------------------------------------===//

#include "partsforge/sha3.hpp"

#include <cstring>

namespace partsforge {
namespace {

constexpr int kRounds = 24;
constexpr size_t kRate = 136; // 1600/8 - 2*256/8

constexpr uint64_t kRoundConst[kRounds] = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808AULL,
    0x8000000080008000ULL, 0x000000000000808BULL, 0x0000000080000001ULL,
    0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008AULL,
    0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000AULL,
    0x000000008000808BULL, 0x800000000000008BULL, 0x8000000000008089ULL,
    0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
    0x000000000000800AULL, 0x800000008000000AULL, 0x8000000080008081ULL,
    0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};

constexpr int kRotation[24] = {1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                               27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};

constexpr int kPiLane[24] = {10, 7,  11, 17, 18, 3,  5,  16, 8,  21, 24, 4,
                             15, 23, 19, 13, 12, 2,  20, 14, 22, 9,  6,  1};

inline uint64_t rotl(uint64_t x, int s) { return (x << s) | (x >> (64 - s)); }

void keccak_f(uint64_t a[25]) {
  for (int round = 0; round < kRounds; ++round) {
    uint64_t c[5], d;
    for (int x = 0; x < 5; ++x)
      c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
    for (int x = 0; x < 5; ++x) {
      d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
      for (int y = 0; y < 25; y += 5)
        a[x + y] ^= d;
    }
    uint64_t last = a[1];
    for (int i = 0; i < 24; ++i) {
      int lane = kPiLane[i];
      uint64_t tmp = a[lane];
      a[lane] = rotl(last, kRotation[i]);
      last = tmp;
    }
    for (int y = 0; y < 25; y += 5) {
      uint64_t row[5];
      std::memcpy(row, &a[y], sizeof(row));
      for (int x = 0; x < 5; ++x)
        a[x + y] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5]);
    }
    a[0] ^= kRoundConst[round];
  }
}

} // namespace

std::array<uint8_t, 32> sha3_256(std::string_view data) {
  uint64_t state[25] = {};
  auto *bytes = reinterpret_cast<uint8_t *>(state);

  size_t offset = 0;
  for (unsigned char ch : data) {
    bytes[offset++] ^= static_cast<uint8_t>(ch);
    if (offset == kRate) {
      keccak_f(state);
      offset = 0;
    }
  }
  bytes[offset] ^= 0x06;
  bytes[kRate - 1] ^= 0x80;
  keccak_f(state);

  std::array<uint8_t, 32> digest;
  std::memcpy(digest.data(), bytes, digest.size());
  return digest;
}

uint64_t sha3_256_prefix64(std::string_view data) {
  auto digest = sha3_256(data);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v = (v << 8) | digest[static_cast<size_t>(i)];
  return v;
}

} // namespace partsforge
