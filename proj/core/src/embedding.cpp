// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/embedding.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "nomad/error.hpp"

namespace nomad::normsim {

std::string_view to_string(Side side) {
  return side == Side::kPrompt ? "prompt" : "response";
}

std::optional<Side> side_from_string(std::string_view text) {
  if (text == "prompt") return Side::kPrompt;
  if (text == "response") return Side::kResponse;
  return std::nullopt;
}

void normalize_row(std::span<double> row) {
  double sq = 0.0;
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite embedding value");
    }
    sq += v * v;
  }
  if (!(sq > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalise a zero row");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : row) v *= inv;
}

void EmbeddingMatrix::check_shape() const {
  if (rows.size() != ids.size() * dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "matrix holds " + std::to_string(rows.size()) +
                    " values for " + std::to_string(ids.size()) + " x " +
                    std::to_string(dim));
  }
  for (double v : rows) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite embedding value");
    }
  }
}

void EmbeddingMatrix::normalize() {
  for (std::size_t i = 0; i < count(); ++i) normalize_row(row(i));
}

namespace {

constexpr std::array<char, 4> kMagic = {'N', 'S', 'I', 'M'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(const char* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return value;
}

struct Header {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

std::size_t value_bytes(std::uint32_t version) {
  return version == kFormatVersionF32 ? 4 : 8;
}

Header read_header(std::istream& in, const std::filesystem::path& path) {
  std::array<char, kHeaderBytes> buf{};
  in.read(buf.data(), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": truncated header");
  }
  if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": bad magic");
  }
  Header h;
  h.version = get_le<std::uint32_t>(buf.data() + 4);
  h.dim = get_le<std::uint32_t>(buf.data() + 8);
  h.count = get_le<std::uint64_t>(buf.data() + 12);
  if (h.version != kFormatVersionF32 && h.version != kFormatVersionF64) {
    throw Error(ErrorCode::kCorruptHeader,
                path.string() + ": unsupported version " +
                    std::to_string(h.version));
  }
  if (h.dim == 0) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": zero dimension");
  }
  return h;
}

std::string read_id(std::istream& in, const std::filesystem::path& path) {
  char len_buf[4];
  in.read(len_buf, 4);
  if (in.gcount() != 4) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": truncated ids");
  }
  const auto len = get_le<std::uint32_t>(len_buf);
  std::string id(len, '\0');
  in.read(id.data(), len);
  if (in.gcount() != static_cast<std::streamsize>(len)) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": truncated ids");
  }
  return id;
}

void decode_values(const char* bytes, std::size_t n, std::uint32_t version,
                   double* out) {
  if (version == kFormatVersionF32) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes + 4 * i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes + 8 * i));
    }
  }
}

}  // namespace

void save_embeddings(const EmbeddingMatrix& matrix,
                     const std::filesystem::path& path,
                     StoragePrecision precision) {
  matrix.check_shape();
  if (matrix.dim == 0 || matrix.dim > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "unsupported dimension");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() +
                                           " for writing");
  }
  const std::uint32_t version = precision == StoragePrecision::kFloat32
                                    ? kFormatVersionF32
                                    : kFormatVersionF64;
  std::string buf(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(buf, version);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(matrix.dim));
  put_le<std::uint64_t>(buf, matrix.count());
  for (const auto& id : matrix.ids) {
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(id.size()));
    buf.append(id);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  constexpr std::size_t kChunkValues = 1 << 16;
  for (std::size_t begin = 0; begin < matrix.rows.size();
       begin += kChunkValues) {
    const std::size_t end = std::min(matrix.rows.size(), begin + kChunkValues);
    buf.clear();
    for (std::size_t i = begin; i < end; ++i) {
      if (version == kFormatVersionF32) {
        put_le<std::uint32_t>(
            buf, std::bit_cast<std::uint32_t>(static_cast<float>(matrix.rows[i])));
      } else {
        put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(matrix.rows[i]));
      }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  out.close();
  if (out.fail()) {
    throw Error(ErrorCode::kIoFailure, "write error in " + path.string());
  }
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  const Header h = read_header(in, path);
  if (h.count == 0) {
    throw Error(ErrorCode::kEmptyMatrix, path.string() + " has no rows");
  }
  EmbeddingMatrix m;
  m.side = options.side;
  m.dim = h.dim;
  m.ids.reserve(h.count);
  for (std::uint64_t i = 0; i < h.count; ++i) m.ids.push_back(read_id(in, path));

  const std::size_t values = h.count * h.dim;
  const std::size_t bytes = values * value_bytes(h.version);
  std::vector<char> payload(bytes);
  in.read(payload.data(), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) {
    throw Error(ErrorCode::kIoFailure, path.string() + ": truncated payload");
  }
  m.rows.resize(values);
  decode_values(payload.data(), values, h.version, m.rows.data());
  m.check_shape();
  if (options.normalize) m.normalize();
  return m;
}

std::size_t MatrixRowSource::next(std::span<double> out) {
  const std::size_t dim = matrix_.dim;
  const std::size_t rows = std::min(out.size() / dim, matrix_.count() - cursor_);
  std::copy_n(matrix_.rows.data() + cursor_ * dim, rows * dim, out.data());
  cursor_ += rows;
  return rows;
}

EmbeddingFileReader::EmbeddingFileReader(const std::filesystem::path& path,
                                         bool normalize)
    : path_(path), in_(path, std::ios::binary), normalize_(normalize) {
  if (!in_) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  const Header h = read_header(in_, path);
  if (h.count == 0) {
    throw Error(ErrorCode::kEmptyMatrix, path.string() + " has no rows");
  }
  version_ = h.version;
  dim_ = h.dim;
  count_ = h.count;
  for (std::size_t i = 0; i < count_; ++i) read_id(in_, path);
  payload_begin_ = in_.tellg();
}

std::size_t EmbeddingFileReader::next(std::span<double> out) {
  const std::size_t rows = std::min(out.size() / dim_, count_ - cursor_);
  if (rows == 0) return 0;
  const std::size_t values = rows * dim_;
  const std::size_t bytes = values * value_bytes(version_);
  scratch_.resize(bytes);
  in_.read(scratch_.data(), static_cast<std::streamsize>(bytes));
  if (in_.gcount() != static_cast<std::streamsize>(bytes)) {
    throw Error(ErrorCode::kIoFailure, path_.string() + ": truncated payload");
  }
  decode_values(scratch_.data(), values, version_, out.data());
  for (std::size_t r = 0; r < rows; ++r) {
    std::span<double> row = out.subspan(r * dim_, dim_);
    if (normalize_) {
      normalize_row(row);
    } else {
      for (double v : row) {
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::kInvalidArgument, "non-finite embedding value");
        }
      }
    }
  }
  cursor_ += rows;
  return rows;
}

void EmbeddingFileReader::rewind() {
  in_.clear();
  in_.seekg(payload_begin_);
  cursor_ = 0;
}

EmbeddingMatrix embed_via_endpoint(const std::vector<std::string>& ids,
                                   const std::vector<std::string>& texts,
                                   http::Transport& transport, Side side,
                                   const EmbedOptions& options) {
  if (texts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no texts to embed");
  }
  if (ids.size() != texts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "ids and texts differ in length");
  }
  const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);
  EmbeddingMatrix m;
  m.side = side;
  m.ids = ids;
  for (std::size_t begin = 0; begin < texts.size(); begin += batch) {
    const std::size_t end = std::min(texts.size(), begin + batch);
    nlohmann::json body;
    if (!options.model.empty()) body["model"] = options.model;
    body["input"] = std::vector<std::string>(texts.begin() + begin,
                                             texts.begin() + end);
    const auto reply = http::post_json(transport, "/embeddings", body,
                                       options.retry);
    auto data = reply.find("data");
    if (data == reply.end() || !data->is_array() ||
        data->size() != end - begin) {
      throw Error(ErrorCode::kEndpointProtocol,
                  "embedding reply does not hold one item per input");
    }
    // Items may carry an explicit "index"; fall back to reply order.
    std::vector<const nlohmann::json*> ordered(end - begin, nullptr);
    for (std::size_t i = 0; i < data->size(); ++i) {
      const auto& item = (*data)[i];
      std::size_t slot = i;
      if (auto idx = item.find("index");
          idx != item.end() && idx->is_number_unsigned()) {
        slot = idx->get<std::size_t>();
      }
      if (slot >= ordered.size() || ordered[slot] != nullptr) {
        throw Error(ErrorCode::kEndpointProtocol, "bad embedding index");
      }
      ordered[slot] = &item;
    }
    for (const auto* item : ordered) {
      auto embedding = item->find("embedding");
      if (embedding == item->end() || !embedding->is_array() ||
          embedding->empty()) {
        throw Error(ErrorCode::kEndpointProtocol, "item without embedding");
      }
      if (m.dim == 0) m.dim = embedding->size();
      if (embedding->size() != m.dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "embedding of length " + std::to_string(embedding->size()) +
                        ", expected " + std::to_string(m.dim));
      }
      for (const auto& v : *embedding) {
        if (!v.is_number()) {
          throw Error(ErrorCode::kEndpointProtocol, "non-numeric embedding");
        }
        m.rows.push_back(v.get<double>());
      }
    }
  }
  m.check_shape();
  if (options.normalize) m.normalize();
  return m;
}

void collect_side(const std::vector<corpus::ChatRecord>& records, Side side,
                  std::vector<std::string>& ids,
                  std::vector<std::string>& texts) {
  ids.reserve(ids.size() + records.size());
  texts.reserve(texts.size() + records.size());
  for (const auto& r : records) {
    ids.push_back(r.id);
    texts.emplace_back(side == Side::kPrompt ? r.prompt() : r.response());
  }
}

}  // namespace nomad::normsim
