// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/random.hpp"

namespace nomad {

std::uint64_t Rng::below(std::uint64_t bound) {
  // Reject the low 2^64 mod bound values so the modulo is unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return x % bound;
  }
}

}  // namespace nomad
