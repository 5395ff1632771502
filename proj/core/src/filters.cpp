// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/filters.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nomad/error.hpp"
#include "nomad/parallel.hpp"
#include "nomad/utf8.hpp"

namespace nomad::filters {

std::string_view to_string(ScanTarget target) {
  switch (target) {
    case ScanTarget::kPrompt: return "prompt";
    case ScanTarget::kResponse: return "response";
    case ScanTarget::kBoth: return "both";
  }
  return "both";
}

std::optional<ScanTarget> scan_target_from_string(std::string_view text) {
  if (text == "prompt") return ScanTarget::kPrompt;
  if (text == "response") return ScanTarget::kResponse;
  if (text == "both") return ScanTarget::kBoth;
  return std::nullopt;
}

std::vector<std::string> default_code_keywords() {
  return {"```",          "def ",         "#include",   "public static",
          "System.out",   "console.log",  "SELECT ",    "printf(",
          "import java",  "Java code",    "Python code", "JavaScript code"};
}

std::vector<std::string> parse_keyword_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    if (line.empty()) continue;
    if (line == "#" || line.starts_with("# ") || line.starts_with("#\t")) {
      continue;
    }
    out.emplace_back(line);
  }
  return out;
}

std::vector<std::string> load_keyword_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_keyword_list(buf.str());
}

void FilterConfig::validate() const {
  if (code_filter && code_keywords.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "code filter enabled with an empty keyword list");
  }
  for (const auto& k : code_keywords) {
    if (k.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "empty code keyword");
    }
  }
  if (repeat_line_threshold < 2) {
    throw Error(ErrorCode::kInvalidConfig, "repeat_line_threshold must be >= 2");
  }
  if (repeat_ngram_max < 1) {
    throw Error(ErrorCode::kInvalidConfig, "repeat_ngram_max must be >= 1");
  }
  if (repeat_ngram_min_count < 2) {
    throw Error(ErrorCode::kInvalidConfig,
                "repeat_ngram_min_count must be >= 2");
  }
}

std::string_view to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::kCodeKeyword: return "code_keyword";
    case FilterReason::kRepeatLines: return "repeat_lines";
    case FilterReason::kRepeatNgram: return "repeat_ngram";
  }
  return "unknown";
}

void FilterVerdict::reject(FilterReason reason) {
  keep = false;
  auto it = std::lower_bound(reasons.begin(), reasons.end(), reason);
  if (it == reasons.end() || *it != reason) reasons.insert(it, reason);
}

namespace {

char fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool contains(std::string_view haystack, std::string_view needle,
              bool case_insensitive) {
  if (!case_insensitive) return haystack.find(needle) != std::string_view::npos;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(),
                        needle.end(),
                        [](char a, char b) { return fold(a) == fold(b); });
  return it != haystack.end();
}

bool scans(ScanTarget target, corpus::Role role) {
  switch (target) {
    case ScanTarget::kPrompt: return role == corpus::Role::kUser;
    case ScanTarget::kResponse: return role == corpus::Role::kAssistant;
    case ScanTarget::kBoth: return true;
  }
  return true;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

bool has_repeated_lines(std::string_view text, int threshold) {
  std::string_view previous;
  int run = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = utf8::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) {
      run = 0;
      previous = {};
      continue;
    }
    run = (run > 0 && line == previous) ? run + 1 : 1;
    previous = line;
    if (run >= threshold) return true;
  }
  return false;
}

bool has_repeated_ngram(std::string_view text, int max_n, int min_count) {
  const auto tokens = tokenize(text);
  const std::size_t count = tokens.size();
  for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
    // A block repeated r times back to back is a stretch where
    // tokens[j] == tokens[j + n] holds for (r - 1) * n consecutive j.
    const std::size_t needed = static_cast<std::size_t>(min_count - 1) * n;
    if (needed + n > count) break;
    std::size_t run = 0;
    for (std::size_t j = 0; j + n < count; ++j) {
      run = tokens[j] == tokens[j + n] ? run + 1 : 0;
      if (run >= needed) return true;
    }
  }
  return false;
}

FilterVerdict filter_code(const corpus::ChatRecord& record,
                          const FilterConfig& config) {
  FilterVerdict verdict;
  for (const auto& m : record.messages) {
    if (!scans(config.code_scan_targets, m.role)) continue;
    for (const auto& keyword : config.code_keywords) {
      if (contains(m.content, keyword, config.case_insensitive)) {
        verdict.reject(FilterReason::kCodeKeyword);
        return verdict;
      }
    }
  }
  return verdict;
}

FilterVerdict filter_repeats(const corpus::ChatRecord& record,
                             const FilterConfig& config) {
  FilterVerdict verdict;
  for (const auto& m : record.messages) {
    if (has_repeated_lines(m.content, config.repeat_line_threshold)) {
      verdict.reject(FilterReason::kRepeatLines);
    }
    if (has_repeated_ngram(m.content, config.repeat_ngram_max,
                           config.repeat_ngram_min_count)) {
      verdict.reject(FilterReason::kRepeatNgram);
    }
  }
  return verdict;
}

FilterVerdict evaluate(const corpus::ChatRecord& record,
                       const FilterConfig& config) {
  FilterVerdict verdict;
  if (config.code_filter) {
    for (auto r : filter_code(record, config).reasons) verdict.reject(r);
  }
  if (config.repeat_filter) {
    for (auto r : filter_repeats(record, config).reasons) verdict.reject(r);
  }
  return verdict;
}

nlohmann::ordered_json FilterReport::to_json() const {
  nlohmann::ordered_json j;
  j["input_count"] = input_count;
  j["kept_count"] = kept_count;
  j["dropped_count"] = dropped_count;
  auto& reasons = j["reason_counts"] = nlohmann::ordered_json::object();
  for (auto r : {FilterReason::kCodeKeyword, FilterReason::kRepeatLines,
                 FilterReason::kRepeatNgram}) {
    auto it = reason_counts.find(r);
    reasons[std::string(to_string(r))] =
        it == reason_counts.end() ? 0 : it->second;
  }
  return j;
}

FilterReport apply_filters(const Source<corpus::ChatRecord>& input,
                           const Sink<corpus::ChatRecord>& kept,
                           const Sink<corpus::ChatRecord>& rejected,
                           const FilterConfig& config,
                           const ApplyOptions& options) {
  config.validate();
  FilterReport report;
  const std::size_t batch_size = std::max<std::size_t>(options.batch_size, 1);
  std::vector<corpus::ChatRecord> batch;
  std::vector<FilterVerdict> verdicts;
  bool exhausted = false;
  while (!exhausted) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto record = input();
      if (!record) {
        exhausted = true;
        break;
      }
      batch.push_back(std::move(*record));
    }
    verdicts.assign(batch.size(), {});
    parallel_chunks(batch.size(), options.threads,
                    [&](std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) {
                        verdicts[i] = evaluate(batch[i], config);
                      }
                    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++report.input_count;
      const auto& verdict = verdicts[i];
      if (verdict.keep) {
        ++report.kept_count;
        kept(std::move(batch[i]));
        continue;
      }
      ++report.dropped_count;
      std::string joined;
      for (auto r : verdict.reasons) {
        ++report.reason_counts[r];
        if (!joined.empty()) joined += ',';
        joined += to_string(r);
      }
      if (rejected) {
        batch[i].meta["filter_reasons"] = joined;
        rejected(std::move(batch[i]));
      }
    }
  }
  return report;
}

}  // namespace nomad::filters
