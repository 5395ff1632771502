// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace nomad::corpus {

enum class Role { kUser, kAssistant };
enum class Source { kTrain, kSynthesis };

std::string_view to_string(Role role);
std::string_view to_string(Source source);
std::optional<Role> role_from_string(std::string_view text);
std::optional<Source> source_from_string(std::string_view text);

struct Message {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

using Meta = std::map<std::string, std::string>;

struct ChatRecord {
  std::string id;
  std::vector<Message> messages;
  Source source = Source::kTrain;
  Meta meta;

  // Exactly one user message followed by one assistant message.
  bool is_single_round() const;
  // Content of the first user / assistant message. Empty when absent.
  std::string_view prompt() const;
  std::string_view response() const;

  friend bool operator==(const ChatRecord&, const ChatRecord&) = default;
};

ChatRecord make_record(std::string id, std::string prompt, std::string response,
                       Source source = Source::kTrain);

// Returns a description of the first violated structural invariant, or
// nullopt when messages are non-empty and roles alternate starting with user.
std::optional<std::string> check_structure(const ChatRecord& record);

inline constexpr std::string_view kUserMarker = "User:";
inline constexpr std::string_view kAssistantMarker = "Assistant:";

enum class Separator { kNewline, kSpace };

std::string_view separator_text(Separator sep);
std::optional<Separator> separator_from_string(std::string_view text);
std::string_view to_string(Separator sep);

struct TemplateOptions {
  Separator separator = Separator::kNewline;
};

// Half-open byte range [begin, end).
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct RenderedText {
  std::string text;
  ByteSpan prompt_span;
  ByteSpan response_span;

  std::string_view slice(ByteSpan span) const {
    return std::string_view(text).substr(span.begin, span.size());
  }
};

// "User: <prompt><SEP>Assistant: <response>". Contents are emitted verbatim.
// Throws MultiRoundRecord, EmptyPrompt or EmptyResponse.
RenderedText render_unified(const ChatRecord& record,
                            const TemplateOptions& options = {});

enum class DiscardReason {
  kInvalidEncoding,
  kMissingUserMarker,
  kNoResponse,
  kEmptyPrompt,
  kEmptyResponse,
  kGenerationError,
};

std::string_view to_string(DiscardReason reason);

struct Discard {
  DiscardReason reason;
  friend bool operator==(const Discard&, const Discard&) = default;
};

using ParseResult = std::variant<ChatRecord, Discard>;

// Keeps only the first user/assistant exchange of a raw generation. Role
// markers are recognised at line starts, and additionally after a space when
// the template separator is a space. The returned record has an empty id.
ParseResult parse_first_round(std::string_view raw,
                              const TemplateOptions& options = {});

// JSONL schema:
// {"id": str, "messages": [{"role": "user"|"assistant", "content": str}],
//  "source": "train"|"synthesis", "meta": {str: str}}
nlohmann::ordered_json to_json(const ChatRecord& record);
// nullopt on any schema violation.
std::optional<ChatRecord> record_from_json(const nlohmann::json& value);

}  // namespace nomad::corpus
