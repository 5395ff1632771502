// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nomad/corpus.hpp"
#include "nomad/http.hpp"

namespace nomad::normsim {

enum class Side { kPrompt, kResponse };

std::string_view to_string(Side side);
std::optional<Side> side_from_string(std::string_view text);

// Dense id-aligned embeddings, row-major, one row per id.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> rows;
  Side side = Side::kPrompt;

  std::size_t count() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return {rows.data() + i * dim, dim};
  }
  std::span<double> row(std::size_t i) { return {rows.data() + i * dim, dim}; }

  // Throws DimensionMismatch when rows.size() != count() * dim and
  // InvalidArgument on non-finite values.
  void check_shape() const;
  // Scales every row to unit L2 norm; throws InvalidArgument on a zero row.
  void normalize();
};

// Normalises one row in place; throws InvalidArgument on zero or non-finite
// input.
void normalize_row(std::span<double> row);

// On-disk layout (little endian):
//   "NSIM" | version u32 | dim u32 | count u64
//   count x (u32 byte length, UTF-8 id)
//   count x dim values, f32 for version 1 and f64 for version 2
inline constexpr std::uint32_t kFormatVersionF32 = 1;
inline constexpr std::uint32_t kFormatVersionF64 = 2;

enum class StoragePrecision { kFloat32, kFloat64 };

void save_embeddings(const EmbeddingMatrix& matrix,
                     const std::filesystem::path& path,
                     StoragePrecision precision = StoragePrecision::kFloat32);

struct LoadOptions {
  bool normalize = false;
  Side side = Side::kPrompt;
};

// Throws IoFailure, CorruptHeader, or EmptyMatrix for a zero-row file.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const LoadOptions& options = {});

// Block-wise producer of embedding rows, so a reference corpus never has to
// be resident in memory as a whole.
class RowSource {
 public:
  virtual ~RowSource() = default;
  virtual std::size_t dim() const = 0;
  // Total number of rows the source yields per pass.
  virtual std::size_t count() const = 0;
  // Fills whole rows into `out` (size a multiple of dim); returns the number
  // of rows written, 0 once the pass is exhausted.
  virtual std::size_t next(std::span<double> out) = 0;
  virtual void rewind() = 0;
};

class MatrixRowSource final : public RowSource {
 public:
  explicit MatrixRowSource(const EmbeddingMatrix& matrix) : matrix_(matrix) {}

  std::size_t dim() const override { return matrix_.dim; }
  std::size_t count() const override { return matrix_.count(); }
  std::size_t next(std::span<double> out) override;
  void rewind() override { cursor_ = 0; }

 private:
  const EmbeddingMatrix& matrix_;
  std::size_t cursor_ = 0;
};

// Streams rows out of an embedding file; ids are skipped.
class EmbeddingFileReader final : public RowSource {
 public:
  EmbeddingFileReader(const std::filesystem::path& path, bool normalize);

  std::size_t dim() const override { return dim_; }
  std::size_t count() const override { return count_; }
  std::size_t next(std::span<double> out) override;
  void rewind() override;

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  bool normalize_;
  std::uint32_t version_ = 0;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::streampos payload_begin_;
  std::size_t cursor_ = 0;
  std::vector<char> scratch_;
};

struct EmbedOptions {
  std::string model;  // omitted from requests when empty
  std::size_t batch_size = 64;
  http::RetryPolicy retry;
  bool normalize = true;
};

// POST <endpoint>/embeddings {"input": [...]} in batches; the reply's
// data[i].embedding rows are returned in input order. Throws InvalidArgument
// for an empty input, DimensionMismatch when rows disagree on length, and
// EndpointProtocol on malformed replies.
EmbeddingMatrix embed_via_endpoint(const std::vector<std::string>& ids,
                                   const std::vector<std::string>& texts,
                                   http::Transport& transport, Side side,
                                   const EmbedOptions& options = {});

// The user (prompt side) or assistant (response side) content of each record.
void collect_side(const std::vector<corpus::ChatRecord>& records, Side side,
                  std::vector<std::string>& ids,
                  std::vector<std::string>& texts);

}  // namespace nomad::normsim
