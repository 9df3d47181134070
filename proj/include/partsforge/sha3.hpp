//===-- sha3.hpp - SHA3-256 -------------------------------------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace partsforge {

/// SHA3-256 (FIPS 202) of `data`.
std::array<uint8_t, 32> sha3_256(std::string_view data);

/// First eight digest bytes interpreted big-endian. This is the type-id
/// derivation applied to canonical type encodings.
uint64_t sha3_256_prefix64(std::string_view data);

} // namespace partsforge
