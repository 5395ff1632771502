// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/corpus.hpp"

#include "nomad/error.hpp"
#include "nomad/utf8.hpp"

namespace nomad::corpus {

std::string_view to_string(Role role) {
  return role == Role::kUser ? "user" : "assistant";
}

std::string_view to_string(Source source) {
  return source == Source::kTrain ? "train" : "synthesis";
}

std::optional<Role> role_from_string(std::string_view text) {
  if (text == "user") return Role::kUser;
  if (text == "assistant") return Role::kAssistant;
  return std::nullopt;
}

std::optional<Source> source_from_string(std::string_view text) {
  if (text == "train") return Source::kTrain;
  if (text == "synthesis") return Source::kSynthesis;
  return std::nullopt;
}

bool ChatRecord::is_single_round() const {
  return messages.size() == 2 && messages[0].role == Role::kUser &&
         messages[1].role == Role::kAssistant;
}

std::string_view ChatRecord::prompt() const {
  for (const auto& m : messages) {
    if (m.role == Role::kUser) return m.content;
  }
  return {};
}

std::string_view ChatRecord::response() const {
  for (const auto& m : messages) {
    if (m.role == Role::kAssistant) return m.content;
  }
  return {};
}

ChatRecord make_record(std::string id, std::string prompt, std::string response,
                       Source source) {
  ChatRecord record;
  record.id = std::move(id);
  record.messages.push_back({Role::kUser, std::move(prompt)});
  record.messages.push_back({Role::kAssistant, std::move(response)});
  record.source = source;
  return record;
}

std::optional<std::string> check_structure(const ChatRecord& record) {
  if (record.messages.empty()) return "no messages";
  for (std::size_t i = 0; i < record.messages.size(); ++i) {
    const Role expected = (i % 2 == 0) ? Role::kUser : Role::kAssistant;
    if (record.messages[i].role != expected) {
      return "message " + std::to_string(i) + " should have role " +
             std::string(to_string(expected));
    }
  }
  return std::nullopt;
}

std::string_view separator_text(Separator sep) {
  return sep == Separator::kNewline ? "\n" : " ";
}

std::optional<Separator> separator_from_string(std::string_view text) {
  if (text == "newline") return Separator::kNewline;
  if (text == "space") return Separator::kSpace;
  return std::nullopt;
}

std::string_view to_string(Separator sep) {
  return sep == Separator::kNewline ? "newline" : "space";
}

RenderedText render_unified(const ChatRecord& record,
                            const TemplateOptions& options) {
  if (auto problem = check_structure(record)) {
    throw Error(ErrorCode::kMultiRoundRecord,
                "record '" + record.id + "': " + *problem);
  }
  if (record.messages.size() != 2) {
    throw Error(ErrorCode::kMultiRoundRecord,
                "record '" + record.id + "' has " +
                    std::to_string(record.messages.size()) + " messages");
  }
  const std::string& prompt = record.messages[0].content;
  const std::string& response = record.messages[1].content;
  if (utf8::trim(prompt).empty()) {
    throw Error(ErrorCode::kEmptyPrompt, "record '" + record.id + "'");
  }
  if (utf8::trim(response).empty()) {
    throw Error(ErrorCode::kEmptyResponse, "record '" + record.id + "'");
  }

  RenderedText out;
  const std::string_view sep = separator_text(options.separator);
  out.text.reserve(kUserMarker.size() + kAssistantMarker.size() + 2 +
                   sep.size() + prompt.size() + response.size());
  out.text.append(kUserMarker).push_back(' ');
  out.prompt_span.begin = out.text.size();
  out.text.append(prompt);
  out.prompt_span.end = out.text.size();
  out.text.append(sep).append(kAssistantMarker).push_back(' ');
  out.response_span.begin = out.text.size();
  out.text.append(response);
  out.response_span.end = out.text.size();
  return out;
}

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::kInvalidEncoding: return "invalid_encoding";
    case DiscardReason::kMissingUserMarker: return "missing_user_marker";
    case DiscardReason::kNoResponse: return "no_response";
    case DiscardReason::kEmptyPrompt: return "empty_prompt";
    case DiscardReason::kEmptyResponse: return "empty_response";
    case DiscardReason::kGenerationError: return "generation_error";
  }
  return "unknown";
}

namespace {

bool is_anchor(std::string_view text, std::size_t pos, Separator sep) {
  if (pos == 0) return true;
  const char prev = text[pos - 1];
  return prev == '\n' || (sep == Separator::kSpace && prev == ' ');
}

// First occurrence of `marker` at or after `from` that sits on an anchor.
std::size_t find_marker(std::string_view text, std::string_view marker,
                        std::size_t from, Separator sep) {
  std::size_t pos = text.find(marker, from);
  while (pos != std::string_view::npos && !is_anchor(text, pos, sep)) {
    pos = text.find(marker, pos + 1);
  }
  return pos;
}

}  // namespace

ParseResult parse_first_round(std::string_view raw,
                              const TemplateOptions& options) {
  if (!utf8::is_valid(raw)) return Discard{DiscardReason::kInvalidEncoding};

  const std::string_view text = utf8::trim(raw);
  if (!text.starts_with(kUserMarker)) {
    return Discard{DiscardReason::kMissingUserMarker};
  }
  const std::size_t prompt_begin = kUserMarker.size();
  const std::size_t assistant =
      find_marker(text, kAssistantMarker, prompt_begin, options.separator);
  if (assistant == std::string_view::npos) {
    return Discard{DiscardReason::kNoResponse};
  }
  const std::string_view prompt =
      utf8::trim(text.substr(prompt_begin, assistant - prompt_begin));
  if (prompt.empty()) return Discard{DiscardReason::kEmptyPrompt};

  const std::size_t response_begin = assistant + kAssistantMarker.size();
  const std::size_t next_user =
      find_marker(text, kUserMarker, response_begin, options.separator);
  const std::string_view response = utf8::trim(
      next_user == std::string_view::npos
          ? text.substr(response_begin)
          : text.substr(response_begin, next_user - response_begin));
  if (response.empty()) return Discard{DiscardReason::kEmptyResponse};

  return make_record({}, std::string(prompt), std::string(response),
                     Source::kSynthesis);
}

nlohmann::ordered_json to_json(const ChatRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  auto& messages = j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : record.messages) {
    nlohmann::ordered_json mj;
    mj["role"] = to_string(m.role);
    mj["content"] = m.content;
    messages.push_back(std::move(mj));
  }
  j["source"] = to_string(record.source);
  auto& meta = j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : record.meta) meta[k] = v;
  return j;
}

std::optional<ChatRecord> record_from_json(const nlohmann::json& value) {
  if (!value.is_object()) return std::nullopt;
  auto id = value.find("id");
  auto messages = value.find("messages");
  if (id == value.end() || !id->is_string()) return std::nullopt;
  if (messages == value.end() || !messages->is_array()) return std::nullopt;

  ChatRecord record;
  record.id = id->get<std::string>();
  for (const auto& m : *messages) {
    if (!m.is_object()) return std::nullopt;
    auto role = m.find("role");
    auto content = m.find("content");
    if (role == m.end() || !role->is_string()) return std::nullopt;
    if (content == m.end() || !content->is_string()) return std::nullopt;
    auto parsed_role = role_from_string(role->get<std::string>());
    if (!parsed_role) return std::nullopt;
    record.messages.push_back({*parsed_role, content->get<std::string>()});
  }
  if (check_structure(record)) return std::nullopt;

  if (auto source = value.find("source"); source != value.end()) {
    if (!source->is_string()) return std::nullopt;
    auto parsed = source_from_string(source->get<std::string>());
    if (!parsed) return std::nullopt;
    record.source = *parsed;
  }
  if (auto meta = value.find("meta"); meta != value.end()) {
    if (!meta->is_object()) return std::nullopt;
    for (const auto& [k, v] : meta->items()) {
      if (!v.is_string()) return std::nullopt;
      record.meta.emplace(k, v.get<std::string>());
    }
  }
  return record;
}

}  // namespace nomad::corpus
