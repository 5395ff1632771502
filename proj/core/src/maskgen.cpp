// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/maskgen.hpp"

#include "nomad/utf8.hpp"

namespace nomad::maskgen {

std::string_view to_string(MaskMode mode) {
  return mode == MaskMode::kMasked ? "masked" : "nomask";
}

std::optional<MaskMode> mask_mode_from_string(std::string_view text) {
  if (text == "masked") return MaskMode::kMasked;
  if (text == "nomask") return MaskMode::kNoMask;
  return std::nullopt;
}

MaskedExample emit_masks(const corpus::ChatRecord& record, MaskMode mode,
                         const MaskOptions& options) {
  corpus::RenderedText rendered =
      corpus::render_unified(record, options.template_options);

  MaskedExample out;
  out.id = record.id;
  out.mode = mode;
  if (mode == MaskMode::kNoMask) {
    out.loss_spans.push_back({0, rendered.text.size()});
  } else {
    corpus::ByteSpan span = rendered.response_span;
    if (options.include_assistant_tag) {
      // The tag is "Assistant: " immediately before the response content.
      span.begin -= corpus::kAssistantMarker.size() + 1;
    }
    out.loss_spans.push_back(span);
  }
  out.text = std::move(rendered.text);
  return out;
}

double mask_coverage(const MaskedExample& example) {
  if (example.text.empty()) return 0.0;
  std::size_t covered = 0;
  for (const auto& s : example.loss_spans) covered += s.size();
  return static_cast<double>(covered) /
         static_cast<double>(example.text.size());
}

std::optional<std::string> check_spans(const MaskedExample& example) {
  std::size_t previous_end = 0;
  for (std::size_t i = 0; i < example.loss_spans.size(); ++i) {
    const auto& s = example.loss_spans[i];
    const std::string where = "span " + std::to_string(i);
    if (s.begin >= s.end) return where + " is empty or reversed";
    if (s.end > example.text.size()) return where + " exceeds text";
    if (i > 0 && s.begin < previous_end) return where + " overlaps or unsorted";
    if (!utf8::is_boundary(example.text, s.begin) ||
        !utf8::is_boundary(example.text, s.end)) {
      return where + " splits a UTF-8 sequence";
    }
    previous_end = s.end;
  }
  return std::nullopt;
}

nlohmann::ordered_json to_json(const MaskedExample& example) {
  nlohmann::ordered_json j;
  j["id"] = example.id;
  j["text"] = example.text;
  auto& spans = j["loss_spans"] = nlohmann::ordered_json::array();
  for (const auto& s : example.loss_spans) {
    spans.push_back(nlohmann::ordered_json::array({s.begin, s.end}));
  }
  j["mode"] = to_string(example.mode);
  return j;
}

std::optional<MaskedExample> example_from_json(const nlohmann::json& value) {
  if (!value.is_object()) return std::nullopt;
  auto id = value.find("id");
  auto text = value.find("text");
  auto spans = value.find("loss_spans");
  auto mode = value.find("mode");
  if (id == value.end() || !id->is_string() || text == value.end() ||
      !text->is_string() || spans == value.end() || !spans->is_array() ||
      mode == value.end() || !mode->is_string()) {
    return std::nullopt;
  }
  MaskedExample out;
  out.id = id->get<std::string>();
  out.text = text->get<std::string>();
  auto parsed_mode = mask_mode_from_string(mode->get<std::string>());
  if (!parsed_mode) return std::nullopt;
  out.mode = *parsed_mode;
  for (const auto& s : *spans) {
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_unsigned() ||
        !s[1].is_number_unsigned()) {
      return std::nullopt;
    }
    out.loss_spans.push_back(
        {s[0].get<std::size_t>(), s[1].get<std::size_t>()});
  }
  if (check_spans(out)) return std::nullopt;
  return out;
}

}  // namespace nomad::maskgen
