// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/embedding.hpp"

namespace nomad::normsim {

// How candidate maxima are found. Both modes return, for every query, the
// maximum over reference rows of the same sequential double-precision FMA dot
// product, so their results are bit-identical.
enum class KernelMode {
  // f32 packed kernel prunes pairs that provably cannot be the maximum given
  // a rounding-error bound; survivors are rescored in double precision.
  kScreened,
  // f64 packed kernel over every pair.
  kDouble,
};

struct ScoreOptions {
  // Upper bound on the scorer's working set: packed queries, per-query state
  // and one reference tile (staging rows plus packed panels).
  std::size_t memory_budget_bytes = std::size_t{512} << 20;
  unsigned threads = 1;
  KernelMode mode = KernelMode::kScreened;
  // Clamp scores into [-1, 1]; meaningful for unit-normalised inputs only.
  bool clamp_unit = true;
  std::string reference_id;
  // Force the portable kernels (tests compare them with the SIMD ones).
  bool portable_kernels = false;
};

struct ScoreStats {
  std::size_t reference_rows = 0;
  std::size_t tiles = 0;
  std::size_t tile_rows = 0;
  std::size_t working_bytes = 0;
  std::size_t rescored_pairs = 0;
  std::string kernel;
};

struct NormSimScores {
  Side side = Side::kPrompt;
  std::vector<std::string> ids;
  std::vector<double> scores;  // aligned with ids
  std::string reference_id;

  // {"side", "reference", "scores": [{"id", "score"}, ...]}
  nlohmann::ordered_json to_json() const;
  static NormSimScores from_json(const nlohmann::json& value);
};

// score(x) = max over reference rows z of <z, x>. Throws DimensionMismatch,
// EmptyMatrix (no queries) and EmptyReference.
NormSimScores normsim_scores(const EmbeddingMatrix& query, RowSource& reference,
                             const ScoreOptions& options = {},
                             ScoreStats* stats = nullptr);

// Same, for an in-memory reference; additionally throws SideMismatch.
NormSimScores normsim_scores(const EmbeddingMatrix& query,
                             const EmbeddingMatrix& reference,
                             const ScoreOptions& options = {},
                             ScoreStats* stats = nullptr);

// The exact accumulation order used for every reported score.
double dot_fma(std::span<const double> a, std::span<const double> b);

struct SimilarityCurve {
  std::vector<double> thresholds;
  std::vector<double> fractions;  // share of scores >= threshold

  nlohmann::ordered_json to_json() const;
};

// -1, -1 + step, ..., 1 (inclusive), computed as (i - n) / n for step 1/n.
std::vector<double> default_grid(double step = 0.01);

// Throws EmptyScores, or InvalidArgument when the grid is not ascending.
SimilarityCurve similarity_curve(std::span<const double> scores,
                                 std::span<const double> grid);

// "threshold,fraction" header followed by one row per grid point.
void write_curve_csv(const SimilarityCurve& curve,
                     const std::filesystem::path& path);

struct Bands {
  double low = 0.35;
  double high = 0.85;
};

struct SideSummary {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  double mass_below = 0;  // score < low
  double mass_mid = 0;    // low <= score <= high
  double mass_above = 0;  // score > high

  nlohmann::ordered_json to_json() const;
};

// Linear interpolation between closest ranks over ascending `sorted`.
double quantile(std::span<const double> sorted, double p);

SideSummary summarize(std::span<const double> scores, const Bands& bands);

struct RelevanceNoveltyReport {
  Bands bands;
  SideSummary prompt;
  SideSummary response;
  SimilarityCurve prompt_curve;
  SimilarityCurve response_curve;

  nlohmann::ordered_json to_json() const;
};

// Throws EmptyScores when either side is empty.
RelevanceNoveltyReport relevance_novelty_report(
    std::span<const double> prompt_scores,
    std::span<const double> response_scores, const Bands& bands = {},
    std::span<const double> grid = {});

}  // namespace nomad::normsim
