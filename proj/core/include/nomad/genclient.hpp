// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/corpus.hpp"
#include "nomad/http.hpp"
#include "nomad/stream.hpp"

namespace nomad::gen {

// Sampling parameters for prefix-prompted synthesis: the endpoint only sees
// the role prefix and writes both the prompt and the response.
struct GenParams {
  std::string prefix = "User: ";
  double temperature = 1.0;
  double top_p = 0.9;
  int max_tokens = 1024;
  std::size_t count = 1;
  std::optional<std::uint64_t> seed;  // per-request seed is seed + index
  std::string model;                  // omitted from requests when empty
  std::vector<std::string> stop = {"\nUser:"};

  // Throws InvalidArgument.
  void validate() const;
  // Request body for generation `index` in the completions wire format.
  nlohmann::json request_body(std::size_t index) const;
};

struct RawGeneration {
  std::size_t index = 0;
  std::string text;  // prefix + completion; empty when the request failed
  std::string finish_reason;
  std::map<std::string, std::string> endpoint_meta;

  friend bool operator==(const RawGeneration&, const RawGeneration&) = default;
};

inline constexpr std::string_view kErrorFinishReason = "error";

// Replay line: {"index": int, "text": str, "finish_reason": str} plus an
// optional "endpoint_meta" object.
nlohmann::ordered_json to_json(const RawGeneration& raw);
std::optional<RawGeneration> raw_from_json(const nlohmann::json& value);

using TransportFactory = std::function<std::unique_ptr<http::Transport>()>;

struct GenerateOptions {
  std::size_t parallelism = 8;
  http::RetryPolicy retry;
};

struct GenerateStats {
  std::size_t requested = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

// Issues params.count completion requests with at most options.parallelism in
// flight and hands the results to `sink` in index order, on the calling
// thread. Each worker owns a transport from `factory`.
//
// Index 0 is requested first, alone: if the endpoint cannot be reached for it
// the run aborts with EndpointUnreachable before anything is emitted. Any later
// failure that survives the retry policy becomes a RawGeneration with empty
// text and finish_reason "error".
GenerateStats generate_batch(const TransportFactory& factory,
                             const GenParams& params,
                             const GenerateOptions& options,
                             const Sink<RawGeneration>& sink);

struct HarvestStats {
  std::size_t raw_count = 0;
  std::size_t valid_count = 0;
  std::map<std::string, std::size_t> discards;  // keyed by DiscardReason name

  std::size_t discard_total() const;
  bool conserved() const { return valid_count + discard_total() == raw_count; }
  nlohmann::ordered_json to_json() const;
};

struct HarvestOptions {
  corpus::TemplateOptions template_options;
  std::string id_prefix = "synth-";
  // Copied into every harvested record's meta (e.g. generation params).
  corpus::Meta meta;
};

// Parses every raw generation down to its first round. Valid records are
// emitted in input order with source=synthesis. Raw indices must be strictly
// increasing (SchemaViolation otherwise).
HarvestStats harvest(const Source<RawGeneration>& raw,
                     const Sink<corpus::ChatRecord>& out,
                     const HarvestOptions& options = {});

// Meta entries describing `params`, used to stamp harvested records.
corpus::Meta params_meta(const GenParams& params);

}  // namespace nomad::gen
