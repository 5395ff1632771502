// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <unistd.h>

#include "nomad/jsonl.hpp"

namespace nomad::testing {

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    auto candidate = base / ("nomad-test-" + std::to_string(::getpid()) + "-" +
                             std::to_string(counter++));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

std::size_t uniform(Gen& g, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(g() % (hi - lo + 1));
}

double uniform_real(Gen& g, double lo, double hi) {
  const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string strip(std::string s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string random_content(Gen& g, std::size_t max_chars) {
  static const std::array<std::string_view, 24> kPieces = {
      "a", "b", "z", "Q", "7", ".", ",", "?", ":", "\"", "\\", "{",
      " ", " ", " ", "\n", "\t", "é", "ß", "中", "文", "😀", "∑", "User"};
  for (;;) {
    std::string s;
    const std::size_t n = uniform(g, 1, std::max<std::size_t>(max_chars, 1));
    for (std::size_t i = 0; i < n; ++i) {
      const auto roll = uniform(g, 0, 99);
      if (roll < 2) {
        s += "User:";
      } else if (roll < 4) {
        s += "Assistant:";
      } else {
        s += kPieces[uniform(g, 0, kPieces.size() - 1)];
      }
    }
    s = strip(std::move(s));
    if (!s.empty()) return s;
  }
}

bool has_anchored_marker(std::string_view text, corpus::Separator sep) {
  for (std::string_view marker : {std::string_view("User:"),
                                  std::string_view("Assistant:")}) {
    for (std::size_t p = text.find(marker); p != std::string_view::npos;
         p = text.find(marker, p + 1)) {
      if (p == 0 || text[p - 1] == '\n') return true;
      if (sep == corpus::Separator::kSpace && text[p - 1] == ' ') return true;
    }
  }
  return false;
}

std::string marker_free_content(Gen& g, std::size_t max_chars) {
  for (;;) {
    std::string s = random_content(g, max_chars);
    if (!has_anchored_marker(s, corpus::Separator::kNewline) &&
        !has_anchored_marker(s, corpus::Separator::kSpace)) {
      return s;
    }
  }
}

std::string clean_prose(Gen& g, std::size_t words) {
  static const std::array<std::string_view, 48> kWords = {
      "river",  "stone",   "garden", "quiet",   "morning", "letter",
      "simple", "bright",  "window", "travel",  "market",  "story",
      "people", "answer",  "history", "weather", "mountain", "picture",
      "kitchen", "village", "careful", "music",  "number",  "summer",
      "winter", "friend",  "coffee", "library", "season",  "harbor",
      "planet", "teacher", "orange", "pencil",  "forest",  "ocean",
      "bridge", "candle",  "castle", "thunder", "meadow",  "lantern",
      "puzzle", "signal",  "valley", "whisper", "journey", "balance"};
  std::string out;
  std::size_t last = kWords.size();
  for (std::size_t i = 0; i < words; ++i) {
    std::size_t w;
    do {
      w = uniform(g, 0, kWords.size() - 1);
    } while (w == last);
    last = w;
    if (i) out += ' ';
    out += kWords[w];
  }
  out += '.';
  return out;
}

bool on_boundary(std::string_view text, std::size_t offset) {
  if (offset == 0 || offset == text.size()) return true;
  if (offset > text.size()) return false;
  return (static_cast<unsigned char>(text[offset]) & 0xC0) != 0x80;
}

std::vector<double> text_embedding(std::string_view text, std::size_t dim) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    h += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    x = static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

normsim::EmbeddingMatrix random_unit_matrix(Gen& g, std::size_t rows,
                                            std::size_t dim,
                                            std::string_view id_prefix,
                                            normsim::Side side) {
  normsim::EmbeddingMatrix m;
  m.dim = dim;
  m.side = side;
  m.rows.resize(rows * dim);
  std::normal_distribution<double> normal;
  for (std::size_t r = 0; r < rows; ++r) {
    m.ids.push_back(std::string(id_prefix) + std::to_string(r));
    double norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double x = normal(g);
      m.rows[r * dim + k] = x;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < dim; ++k) m.rows[r * dim + k] /= norm;
  }
  return m;
}

namespace {

corpus::ChatRecord corpus_record(Gen& g, std::string_view id_prefix,
                                 std::size_t i) {
  return corpus::make_record(std::string(id_prefix) + std::to_string(i),
                             clean_prose(g, uniform(g, 4, 12)),
                             clean_prose(g, uniform(g, 6, 24)));
}

}  // namespace

std::vector<corpus::ChatRecord> make_corpus(std::size_t count,
                                            std::string_view id_prefix,
                                            std::uint64_t seed) {
  Gen g(seed);
  std::vector<corpus::ChatRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(corpus_record(g, id_prefix, i));
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::size_t count,
                  std::string_view id_prefix, std::uint64_t seed) {
  Gen g(seed);
  jsonl::Writer writer(path);
  for (std::size_t i = 0; i < count; ++i) {
    writer.write(corpus::to_json(corpus_record(g, id_prefix, i)));
  }
  writer.close();
}

const char* const kJavaCodePrompt =
    "What is the significance of the \"f\" variable in this Java code, and how "
    "is it used to modify the output?";

const char* const kJavaCodeResponse =
    "The variable \"f\" in this code represents the fre- quency of the body "
    "frequency range. The body frequency range is calculated by subtracting "
    "the minimum pulse rate from the maximum pulse rate and dividing by 5 to "
    "get the frequency. The output is then modified by multiplying the body "
    "frequency range by the variable \"f\" to increase or decrease the "
    "frequency of the body frequency range.";

std::string repeated_table_excerpt() {
  std::string out = "...\n";
  out += "| however, in contrast, on the other hand | however, in contrast, "
         "on the other hand |\n";
  out += "| not only... but also... | not only... but also... |\n";
  out += "| not only... but also... | not only... but also... |\n";
  out += "    | either... or... | either... or... | \n";
  for (int i = 0; i < 5; ++i) out += "| either... or... | either... or... | \n";
  out += "...";
  return out;
}

MockServer::MockServer() : server_(std::make_unique<httplib::Server>()) {
  server_->Post(R"(/v1(/.*))", [this](const httplib::Request& req,
                                      httplib::Response& res) {
    const std::string route = req.matches[1];
    Handler handler;
    {
      std::lock_guard lock(mu_);
      ++calls_[route];
      auto it = handlers_.find(route);
      if (it != handlers_.end()) handler = it->second;
    }
    if (!handler) {
      res.status = 404;
      return;
    }
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      return;
    }
    const Reply reply = handler(body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("mock server cannot bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockServer::~MockServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void MockServer::on(const std::string& route, Handler handler) {
  std::lock_guard lock(mu_);
  handlers_[route] = std::move(handler);
}

std::string MockServer::url() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

std::size_t MockServer::calls(const std::string& route) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(route);
  return it == calls_.end() ? 0 : it->second;
}

MockServer::Reply MockServer::completion(const std::string& text,
                                         const std::string& finish_reason) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array(
      {{{"text", text}, {"finish_reason", finish_reason}}});
  return {200, j.dump()};
}

MockServer::Handler MockServer::embeddings(std::size_t dim) {
  return [dim](const nlohmann::json& request) -> Reply {
    const auto& input = request.at("input");
    nlohmann::json data = nlohmann::json::array();
    for (std::size_t i = 0; i < input.size(); ++i) {
      data.push_back({{"index", i},
                      {"embedding",
                       text_embedding(input[i].get<std::string>(), dim)}});
    }
    return {200, nlohmann::json{{"data", data}}.dump()};
  };
}

}  // namespace nomad::testing
