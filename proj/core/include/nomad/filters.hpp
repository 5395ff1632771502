// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/corpus.hpp"
#include "nomad/stream.hpp"

namespace nomad::filters {

enum class ScanTarget { kPrompt, kResponse, kBoth };

std::string_view to_string(ScanTarget target);
std::optional<ScanTarget> scan_target_from_string(std::string_view text);

// Fenced code, common language idioms and "<Language> code" references.
std::vector<std::string> default_code_keywords();

// One literal per line. Lines that are exactly "#" or start with "# " are
// comments, so keywords such as "#include" survive. Literals are not trimmed;
// trailing spaces are significant ("def ").
std::vector<std::string> parse_keyword_list(std::string_view text);
std::vector<std::string> load_keyword_file(const std::filesystem::path& path);

struct FilterConfig {
  bool code_filter = true;
  std::vector<std::string> code_keywords = default_code_keywords();
  ScanTarget code_scan_targets = ScanTarget::kBoth;
  bool case_insensitive = false;

  bool repeat_filter = true;
  int repeat_line_threshold = 3;   // consecutive identical non-empty lines
  int repeat_ngram_max = 8;        // longest n-gram considered, in tokens
  int repeat_ngram_min_count = 5;  // consecutive repeats that trigger a drop

  // Throws InvalidConfig.
  void validate() const;
};

enum class FilterReason { kCodeKeyword, kRepeatLines, kRepeatNgram };

std::string_view to_string(FilterReason reason);

struct FilterVerdict {
  bool keep = true;
  std::vector<FilterReason> reasons;  // in enum order, no duplicates

  void reject(FilterReason reason);
  friend bool operator==(const FilterVerdict&, const FilterVerdict&) = default;
};

FilterVerdict filter_code(const corpus::ChatRecord& record,
                          const FilterConfig& config);
FilterVerdict filter_repeats(const corpus::ChatRecord& record,
                             const FilterConfig& config);
// Union of both filters, honouring the enable switches in `config`.
FilterVerdict evaluate(const corpus::ChatRecord& record,
                       const FilterConfig& config);

// Building blocks of filter_repeats, exposed for diagnostics and tests.
// Lines are compared after trimming surrounding whitespace.
bool has_repeated_lines(std::string_view text, int threshold);
bool has_repeated_ngram(std::string_view text, int max_n, int min_count);

struct FilterReport {
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::size_t dropped_count = 0;
  // A record failing several filters appears under every matching reason.
  std::map<FilterReason, std::size_t> reason_counts;

  bool conserved() const { return kept_count + dropped_count == input_count; }
  nlohmann::ordered_json to_json() const;
};

struct ApplyOptions {
  unsigned threads = 1;
  std::size_t batch_size = 1024;
};

// Order-preserving. Rejected records get meta["filter_reasons"] (comma
// separated) and are forwarded to `rejected` when it is set.
FilterReport apply_filters(const Source<corpus::ChatRecord>& input,
                           const Sink<corpus::ChatRecord>& kept,
                           const Sink<corpus::ChatRecord>& rejected,
                           const FilterConfig& config,
                           const ApplyOptions& options = {});

}  // namespace nomad::filters
