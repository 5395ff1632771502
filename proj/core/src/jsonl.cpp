// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/jsonl.hpp"

#include "nomad/error.hpp"

namespace nomad::jsonl {

LineReader::LineReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) {
    throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  }
}

bool LineReader::next(std::string& line) {
  if (!std::getline(in_, line)) {
    if (in_.bad()) {
      throw Error(ErrorCode::kIoFailure, "read error in " + path_.string());
    }
    return false;
  }
  ++line_number_;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

Writer::Writer(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) {
    throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() +
                                           " for writing");
  }
}

Writer::~Writer() {
  if (out_.is_open()) out_.close();
}

void Writer::write(const nlohmann::ordered_json& value) {
  out_ << dump_line(value) << '\n';
  if (!out_) {
    throw Error(ErrorCode::kIoFailure, "write error in " + path_.string());
  }
  ++count_;
}

void Writer::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (out_.fail()) {
    throw Error(ErrorCode::kIoFailure, "flush error in " + path_.string());
  }
}

Reader<corpus::ChatRecord> open_records(const std::filesystem::path& path) {
  return Reader<corpus::ChatRecord>(path, &corpus::record_from_json);
}

std::vector<corpus::ChatRecord> read_records(const std::filesystem::path& path,
                                             std::size_t* skipped) {
  auto reader = open_records(path);
  std::vector<corpus::ChatRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  if (skipped) *skipped += reader.stats().skipped;
  return out;
}

std::size_t write_records(const std::filesystem::path& path,
                          const std::vector<corpus::ChatRecord>& records) {
  Writer writer(path);
  for (const auto& r : records) writer.write(corpus::to_json(r));
  writer.close();
  return writer.count();
}

std::string dump_line(const nlohmann::ordered_json& value) {
  try {
    return value.dump();
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::ordered_json& value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() +
                                           " for writing");
  }
  out << value.dump(2) << '\n';
  out.close();
  if (out.fail()) {
    throw Error(ErrorCode::kIoFailure, "write error in " + path.string());
  }
}

}  // namespace nomad::jsonl
