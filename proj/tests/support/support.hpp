// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/corpus.hpp"
#include "nomad/embedding.hpp"

namespace httplib {
class Server;
}

namespace nomad::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
std::size_t count_lines(const std::filesystem::path& path);

// Hand-rolled generators for property tests.
using Gen = std::mt19937_64;

std::size_t uniform(Gen& g, std::size_t lo, std::size_t hi);  // inclusive
double uniform_real(Gen& g, double lo, double hi);

// Mixed ASCII / multi-byte UTF-8 text with internal spaces and newlines.
// Never begins or ends with whitespace and is never empty.
std::string random_content(Gen& g, std::size_t max_chars);

// True when "User:" or "Assistant:" occurs where the parser would treat it as
// a role marker: at offset 0, after a newline, or (space separator) after a
// space.
bool has_anchored_marker(std::string_view text, corpus::Separator sep);

// random_content() that passes !has_anchored_marker for both separators.
std::string marker_free_content(Gen& g, std::size_t max_chars);

// One line of prose over a fixed vocabulary with no default code keyword and
// no word repeated back to back.
std::string clean_prose(Gen& g, std::size_t words);

// Independent UTF-8 boundary check: offset is not a continuation byte.
bool on_boundary(std::string_view text, std::size_t offset);

// Unit vector derived only from (text, dim).
std::vector<double> text_embedding(std::string_view text, std::size_t dim);

// Random unit rows, row-major.
normsim::EmbeddingMatrix random_unit_matrix(Gen& g, std::size_t rows,
                                            std::size_t dim,
                                            std::string_view id_prefix,
                                            normsim::Side side =
                                                normsim::Side::kPrompt);

// `count` single-round clean-prose records with ids "<prefix><i>".
std::vector<corpus::ChatRecord> make_corpus(std::size_t count,
                                            std::string_view id_prefix,
                                            std::uint64_t seed);
// Streams the same records as make_corpus() straight to a JSONL file.
void write_corpus(const std::filesystem::path& path, std::size_t count,
                  std::string_view id_prefix, std::uint64_t seed);

// Filter fixtures: a prompt that names its language, the response paired with
// it, and a table excerpt whose rows repeat.
extern const char* const kJavaCodePrompt;
extern const char* const kJavaCodeResponse;
std::string repeated_table_excerpt();

// Local HTTP server speaking the completions and embeddings wire formats.
// Routes live under /v1; url() includes that prefix.
class MockServer {
 public:
  struct Reply {
    int status = 200;
    std::string body;
  };
  using Handler = std::function<Reply(const nlohmann::json& request)>;

  MockServer();
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // `route` is e.g. "/completions".
  void on(const std::string& route, Handler handler);
  std::string url() const;
  std::size_t calls(const std::string& route) const;

  // {"choices": [{"text": ..., "finish_reason": ...}]}
  static Reply completion(const std::string& text,
                          const std::string& finish_reason = "stop");
  // Embeddings from text_embedding(); honours batching.
  static Handler embeddings(std::size_t dim);

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::map<std::string, Handler> handlers_;
  std::map<std::string, std::size_t> calls_;
};

}  // namespace nomad::testing
