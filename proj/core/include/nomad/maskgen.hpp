// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/corpus.hpp"

namespace nomad::maskgen {

// masked: loss on the response only. nomask: loss on the whole rendered text.
enum class MaskMode { kMasked, kNoMask };

std::string_view to_string(MaskMode mode);
std::optional<MaskMode> mask_mode_from_string(std::string_view text);

struct MaskOptions {
  corpus::TemplateOptions template_options;
  // In masked mode, extend the learned region backwards over "Assistant: ".
  bool include_assistant_tag = false;
};

struct MaskedExample {
  std::string id;
  std::string text;
  std::vector<corpus::ByteSpan> loss_spans;  // sorted, disjoint, non-empty
  MaskMode mode = MaskMode::kMasked;

  friend bool operator==(const MaskedExample&, const MaskedExample&) = default;
};

// Renders `record` with the unified template and annotates the bytes that
// carry training loss. Propagates render errors.
MaskedExample emit_masks(const corpus::ChatRecord& record, MaskMode mode,
                         const MaskOptions& options = {});

// Sum of span lengths over the text length; 0 for empty text.
double mask_coverage(const MaskedExample& example);

// nullopt when all span invariants hold, otherwise the first violation.
std::optional<std::string> check_spans(const MaskedExample& example);

// {"id": str, "text": str, "loss_spans": [[int,int],...], "mode": str}
nlohmann::ordered_json to_json(const MaskedExample& example);
std::optional<MaskedExample> example_from_json(const nlohmann::json& value);

}  // namespace nomad::maskgen
