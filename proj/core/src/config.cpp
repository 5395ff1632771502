// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "nomad/error.hpp"

namespace nomad {
namespace {

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line_no)
      : text_(text), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::kInvalidConfig,
                "line " + std::to_string(line_no_) + ": " + why);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) {
      ++pos_;
    }
  }

  bool at_end_or_comment() {
    skip_space();
    return pos_ >= text_.size() || text_[pos_] == '#';
  }

  std::string key() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
      if (!ok) break;
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  ConfigValue value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return string();
    if (c == '[') return array();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '\t' &&
           text_[pos_] != '#') {
      ++pos_;
    }
    const std::string_view token = text_.substr(start, pos_ - start);
    if (token == "true") return true;
    if (token == "false") return false;
    if (token == "inf" || token == "+inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
    const bool integral =
        token.find_first_of(".eE") == std::string_view::npos;
    std::string_view digits = token;
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (integral) {
      std::int64_t v = 0;
      auto [end, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || end != last) fail("bad value '" + std::string(token) + "'");
      return v;
    }
    double v = 0;
    auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || end != last) fail("bad value '" + std::string(token) + "'");
    return v;
  }

 private:
  static void append_utf8(std::string& out, unsigned cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::string string() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= text_.size()) break;
      const char e = text_[pos_++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'u': {
          if (pos_ + 4 > text_.size()) fail("truncated \\u escape");
          unsigned cp = 0;
          auto [end, ec] = std::from_chars(text_.data() + pos_,
                                           text_.data() + pos_ + 4, cp, 16);
          if (ec != std::errc() || end != text_.data() + pos_ + 4) {
            fail("bad \\u escape");
          }
          pos_ += 4;
          append_utf8(out, cp);
          break;
        }
        default: fail(std::string("unknown escape \\") + e);
      }
    }
    fail("unterminated string");
  }

  std::vector<std::string> array() {
    ++pos_;  // '['
    std::vector<std::string> out;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    for (;;) {
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != '"') {
        fail("arrays may only hold strings");
      }
      out.push_back(string());
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']'");
    }
  }

  std::string_view text_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

std::string render(const ConfigValue& value) {
  struct Visitor {
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      if (std::isnan(v)) return "nan";
      if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      std::string s(buf, end);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      return s;
    }
    std::string operator()(const std::string& v) const { return quote(v); }
    std::string operator()(const std::vector<std::string>& v) const {
      std::string out = "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += quote(v[i]);
      }
      return out + "]";
    }
  };
  return std::visit(Visitor{}, value);
}

[[noreturn]] void type_error(const std::string& key, const char* expected) {
  throw Error(ErrorCode::kInvalidConfig, key + " must be " + expected);
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config config;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;

    LineParser p(line, line_no);
    if (p.at_end_or_comment()) continue;
    const auto first = line.find_first_not_of(" \t");
    if (line[first] == '[') {
      p.expect('[');
      section = p.key();
      p.expect(']');
      if (!p.at_end_or_comment()) p.fail("trailing characters after section");
      continue;
    }
    const std::string name = p.key();
    p.expect('=');
    ConfigValue value = p.value();
    if (!p.at_end_or_comment()) p.fail("trailing characters after value");
    const std::string full = section.empty() ? name : section + "." + name;
    if (config.values_.contains(full)) p.fail("duplicate key " + full);
    config.values_.emplace(full, std::move(value));
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

bool Config::contains(const std::string& key) const {
  return values_.contains(key);
}

const ConfigValue* Config::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void Config::set(const std::string& key, ConfigValue value) {
  values_[key] = std::move(value);
}

void Config::erase(const std::string& key) { values_.erase(key); }

std::string Config::get_string(const std::string& key,
                               std::string fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  type_error(key, "a string");
}

std::int64_t Config::get_int(const std::string& key,
                             std::int64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  type_error(key, "an integer");
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(v)) {
    return static_cast<double>(*i);
  }
  type_error(key, "a number");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (const auto* b = std::get_if<bool>(v)) return *b;
  type_error(key, "a boolean");
}

std::vector<std::string> Config::get_strings(
    const std::string& key, std::vector<std::string> fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (const auto* a = std::get_if<std::vector<std::string>>(v)) return *a;
  if (const auto* s = std::get_if<std::string>(v)) return {*s};
  type_error(key, "a string array");
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::string Config::dump() const {
  std::map<std::string, std::vector<std::pair<std::string, const ConfigValue*>>>
      sections;
  for (const auto& [key, value] : values_) {
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) {
      sections[""].emplace_back(key, &value);
    } else {
      sections[key.substr(0, dot)].emplace_back(key.substr(dot + 1), &value);
    }
  }
  std::string out;
  for (const auto& [section, entries] : sections) {
    if (!section.empty()) {
      if (!out.empty()) out += "\n";
      out += "[" + section + "]\n";
    }
    for (const auto& [name, value] : entries) {
      out += name + " = " + render(*value) + "\n";
    }
  }
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nomad
