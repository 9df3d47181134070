//===-- diag.hpp - Source diagnostics ---------------------------*- C++ -*-===//
//
// Part of PartsForge, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#pragma once

#include <string>

namespace partsforge {

/// A message tied to a 1-based source line (0 when no location applies).
struct Diagnostic {
  int line = 0;
  std::string message;
};

} // namespace partsforge
