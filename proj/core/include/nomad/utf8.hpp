// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace nomad::utf8 {

// Strict RFC 3629 validation: rejects overlongs, surrogates and code points
// above U+10FFFF.
bool is_valid(std::string_view text);

// True when `offset` does not fall inside a multi-byte sequence. Offsets 0 and
// text.size() are always boundaries.
bool is_boundary(std::string_view text, std::size_t offset);

// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace nomad::utf8
