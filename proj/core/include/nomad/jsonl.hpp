// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/corpus.hpp"

namespace nomad::jsonl {

// Line-by-line reader over a file; memory use is bounded by the longest line.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);

  // Reads the next line without its terminator ("\n" or "\r\n").
  bool next(std::string& line);
  std::size_t line_number() const { return line_number_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_number_ = 0;
};

struct ReadStats {
  std::size_t read = 0;     // lines decoded into values
  std::size_t skipped = 0;  // malformed or schema-violating lines
};

template <typename T>
using Decoder = std::function<std::optional<T>(const nlohmann::json&)>;

// Streaming typed reader. Blank lines are ignored; malformed JSON and lines
// rejected by the decoder are counted in stats().skipped and skipped.
template <typename T>
class Reader {
 public:
  Reader(const std::filesystem::path& path, Decoder<T> decode)
      : lines_(path), decode_(std::move(decode)) {}

  std::optional<T> next() {
    std::string line;
    while (lines_.next(line)) {
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded()) {
        ++stats_.skipped;
        continue;
      }
      auto value = decode_(parsed);
      if (!value) {
        ++stats_.skipped;
        continue;
      }
      ++stats_.read;
      return value;
    }
    return std::nullopt;
  }

  const ReadStats& stats() const { return stats_; }

 private:
  LineReader lines_;
  Decoder<T> decode_;
  ReadStats stats_;
};

// Writes one compact JSON object per line. Throws IoFailure on open or write
// errors; close() is implicit on destruction but only an explicit close()
// reports a failed final flush.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void write(const nlohmann::ordered_json& value);
  void close();
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

Reader<corpus::ChatRecord> open_records(const std::filesystem::path& path);

// Reads every valid record; malformed lines are added to *skipped when given.
std::vector<corpus::ChatRecord> read_records(const std::filesystem::path& path,
                                             std::size_t* skipped = nullptr);

std::size_t write_records(const std::filesystem::path& path,
                          const std::vector<corpus::ChatRecord>& records);

// Serialises with strict UTF-8 checking; throws SchemaViolation otherwise.
std::string dump_line(const nlohmann::ordered_json& value);

// Writes a pretty-printed JSON document (used for summaries and reports).
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::ordered_json& value);

}  // namespace nomad::jsonl
