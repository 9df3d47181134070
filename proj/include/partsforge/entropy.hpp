//===-- entropy.hpp - Guessing entropy of truncated PACs -------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// How long does it take to guess a b-bit authentication code? Two attacker
// models bound the answer. Under the restart policy every failed attempt
// crashes the victim, which comes back with fresh keys, so attempts are
// independent coin flips and the count is geometric. Under the sibling
// policy a forked child crashes instead while the keys stay fixed, letting
// the attacker enumerate candidates without replacement.
//
// The closed forms are checked against simulation, and the simulation's
// single-attempt success rate is checked against the full machine, so the
// formulas, the sampled oracle, and the instruction set agree.
//
//===----------------------------------------------------------------------===//

#ifndef PARTSFORGE_ENTROPY_HPP
#define PARTSFORGE_ENTROPY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace partsforge::entropy {

/// Attempts needed to succeed with probability `p` against a fresh
/// `pac_bits`-bit code per attempt: floor(ln(1-p) / ln(1-2^-pac_bits)).
/// Throws std::domain_error unless 0 < p < 1 and 1 <= pac_bits <= 63.
uint64_t guess_attempts(double p, unsigned pac_bits);

/// Mean attempts to find a fixed `pac_bits`-bit code by enumeration
/// without replacement: 2^(pac_bits-1). Same domain rule for `pac_bits`.
uint64_t sibling_average_guesses(unsigned pac_bits);

enum class Policy {
  Restart, ///< every attempt faces freshly drawn keys
  Sibling, ///< keys fixed, candidates tried without replacement
};

const char *policy_name(Policy p);
std::optional<Policy> policy_from_string(const std::string &s);

struct BruteforceStats {
  Policy policy = Policy::Restart;
  unsigned pac_bits = 0;
  uint64_t max_attempts = 0; ///< cap per trial; 0 means unbounded
  /// Attempts spent per trial; a trial that hit the cap without success
  /// records the cap itself.
  std::vector<uint64_t> attempts;
  /// Whether each trial found the code.
  std::vector<uint8_t> success;

  uint64_t trials() const { return attempts.size(); }
  uint64_t successes() const;
  /// Fraction of trials that succeeded within `k` attempts.
  double success_within(uint64_t k) const;
  /// Mean attempts over successful trials.
  double mean_attempts() const;
};

/// Samples the guessing game `trials` times by querying the PAC oracle
/// once per attempt. Restart trials draw a fresh key for every attempt
/// and stop when the oracle output matches the attacker's fixed guess;
/// sibling trials fix the key and sweep candidates from a random start.
/// Sibling trials always succeed within 2^pac_bits attempts, so the cap
/// applies only to the restart policy.
BruteforceStats simulate_bruteforce(unsigned pac_bits, Policy policy,
                                    uint64_t trials, uint64_t seed,
                                    uint64_t max_attempts = 0);

} // namespace partsforge::entropy

#endif // PARTSFORGE_ENTROPY_HPP
