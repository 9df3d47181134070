//===-- entropy.cpp - Guessing entropy formulas and simulation ------------===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "partsforge/entropy.hpp"

#include "partsforge/pa_core.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace partsforge::entropy {

namespace {

void check_bits(unsigned pac_bits) {
  if (pac_bits < 1 || pac_bits > 63)
    throw std::domain_error("pac_bits must be in [1, 63]");
}

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// One oracle query under the restart policy: attempt `a` of the trial
/// whose key stream starts at `base` sees the PAC of (ptr, modifier)
/// under a key it has never seen before.
uint64_t restart_pac(uint64_t base, uint64_t a, uint64_t ptr, uint64_t mod) {
  uint64_t hi = mix(base + 2 * a * kGolden);
  uint64_t lo = mix(base + (2 * a + 1) * kGolden);
  using pa::ToyMac;
  return ToyMac::fmix64(ToyMac::fmix64(ptr ^ lo) ^ mod ^ hi);
}

constexpr uint64_t kOraclePtr = 0x2A000;
constexpr uint64_t kOracleMod = 0x1D;

} // namespace

uint64_t guess_attempts(double p, unsigned pac_bits) {
  check_bits(pac_bits);
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("success probability must be in (0, 1)");
  double q = std::ldexp(1.0, -static_cast<int>(pac_bits));
  double n = std::log1p(-p) / std::log1p(-q);
  return static_cast<uint64_t>(std::floor(n));
}

uint64_t sibling_average_guesses(unsigned pac_bits) {
  check_bits(pac_bits);
  return uint64_t{1} << (pac_bits - 1);
}

const char *policy_name(Policy p) {
  return p == Policy::Restart ? "restart" : "sibling";
}

std::optional<Policy> policy_from_string(const std::string &s) {
  std::string low;
  for (char c : s)
    low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (low == "restart")
    return Policy::Restart;
  if (low == "sibling")
    return Policy::Sibling;
  return std::nullopt;
}

uint64_t BruteforceStats::successes() const {
  uint64_t n = 0;
  for (uint8_t s : success)
    n += s;
  return n;
}

double BruteforceStats::success_within(uint64_t k) const {
  if (attempts.empty())
    return 0.0;
  uint64_t n = 0;
  for (size_t i = 0; i < attempts.size(); ++i)
    if (success[i] && attempts[i] <= k)
      ++n;
  return static_cast<double>(n) / static_cast<double>(attempts.size());
}

double BruteforceStats::mean_attempts() const {
  uint64_t n = 0;
  double sum = 0.0;
  for (size_t i = 0; i < attempts.size(); ++i)
    if (success[i]) {
      ++n;
      sum += static_cast<double>(attempts[i]);
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

BruteforceStats simulate_bruteforce(unsigned pac_bits, Policy policy,
                                    uint64_t trials, uint64_t seed,
                                    uint64_t max_attempts) {
  check_bits(pac_bits);
  const uint64_t mask = (uint64_t{1} << pac_bits) - 1;

  BruteforceStats stats;
  stats.policy = policy;
  stats.pac_bits = pac_bits;
  stats.max_attempts = max_attempts;
  stats.attempts.reserve(trials);
  stats.success.reserve(trials);

  for (uint64_t trial = 0; trial < trials; ++trial) {
    uint64_t base = mix(seed * kGolden + trial + 1);

    if (policy == Policy::Sibling) {
      // One key for the whole trial; the child's crashes leak nothing but
      // wrong-guess facts, so the attacker sweeps candidates from a
      // random starting point, never repeating one.
      uint64_t hi = mix(base + kGolden);
      uint64_t lo = mix(base + 2 * kGolden);
      using pa::ToyMac;
      uint64_t real =
          ToyMac::fmix64(ToyMac::fmix64(kOraclePtr ^ lo) ^ kOracleMod ^ hi) &
          mask;
      uint64_t start = mix(base + 3 * kGolden) & mask;
      uint64_t n = 0;
      for (uint64_t j = 0; j <= mask; ++j) {
        ++n;
        if (((start + j) & mask) == real)
          break;
      }
      stats.attempts.push_back(n);
      stats.success.push_back(1);
      continue;
    }

    // Restart policy: the attacker commits to one guess; every attempt
    // the victim reboots with fresh keys, so each oracle query is an
    // independent 2^-pac_bits event. Attempts are evaluated in blocks of
    // eight; each is a pure function of its index, which keeps the eight
    // MAC pipelines independent and the loop fast.
    uint64_t guess = mix(base) & mask;
    const uint64_t limit =
        max_attempts ? max_attempts : ~uint64_t{0};
    uint64_t n = 0;
    bool found = false;
    while (!found && n < limit) {
      uint64_t block = limit - n < 8 ? limit - n : 8;
      uint64_t pacs[8];
      for (uint64_t j = 0; j < block; ++j)
        pacs[j] = restart_pac(base, n + 1 + j, kOraclePtr, kOracleMod);
      for (uint64_t j = 0; j < block; ++j) {
        ++n;
        if ((pacs[j] & mask) == guess) {
          found = true;
          break;
        }
      }
    }
    stats.attempts.push_back(found ? n : limit);
    stats.success.push_back(found ? 1 : 0);
  }
  return stats;
}

} // namespace partsforge::entropy
