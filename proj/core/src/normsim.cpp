// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/normsim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "nomad/error.hpp"
#include "nomad/parallel.hpp"
#include "normsim_kernels.hpp"

namespace nomad::normsim {
namespace {

using detail::kQueryPanel;
using detail::kRefPanelF32;
using detail::kRefPanelF64;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Query panels handled per pass over a reference panel (96 queries).
constexpr std::size_t kPanelsPerBlock = 16;
constexpr std::size_t kOverheadBytes = std::size_t{1} << 20;
// Norms above this could overflow f32 products; such pairs skip screening.
constexpr double kMaxScreenNorm = 1e15;

// Absolute error bound coefficient c such that, for one pair,
// |f32 kernel lane - f64 dot_fma| <= c * |q| * |r| (+ an underflow term).
// Covers rounding both inputs to f32, d sequential f32 FMAs, and d sequential
// f64 FMAs.
double screen_coefficient(std::size_t dim) {
  const double u32 = std::ldexp(1.0, -24);
  const double u64 = std::ldexp(1.0, -53);
  const double n = static_cast<double>(dim) + 1.0;
  const double gamma32 = n * u32 / (1.0 - n * u32);
  const double gamma64 = n * u64 / (1.0 - n * u64);
  const double input_rounding = 2.0 * u32 + u32 * u32;
  return 1.01 * (gamma32 * (1.0 + u32) * (1.0 + u32) + input_rounding +
                 2.0 * gamma64);
}
constexpr double kUnderflowSlack = 1e-30;

double row_norm(const double* row, std::size_t dim) {
  double sq = 0.0;
  for (std::size_t k = 0; k < dim; ++k) sq += row[k] * row[k];
  return std::sqrt(sq);
}

std::size_t round_up(std::size_t n, std::size_t multiple) {
  return (n + multiple - 1) / multiple * multiple;
}

template <typename T>
struct AlignedDeleter {
  void operator()(T* p) const { ::operator delete[](p, std::align_val_t{64}); }
};

template <typename T>
using AlignedBuffer = std::unique_ptr<T[], AlignedDeleter<T>>;

template <typename T>
AlignedBuffer<T> make_aligned(std::size_t n) {
  return AlignedBuffer<T>(static_cast<T*>(
      ::operator new[](std::max<std::size_t>(n, 1) * sizeof(T),
                       std::align_val_t{64})));
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

}  // namespace

double dot_fma(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "dot of unequal lengths");
  }
  return detail::kernels().dot(a.data(), b.data(), a.size());
}

NormSimScores normsim_scores(const EmbeddingMatrix& query, RowSource& reference,
                             const ScoreOptions& options, ScoreStats* stats) {
  query.check_shape();
  if (query.count() == 0) {
    throw Error(ErrorCode::kEmptyMatrix, "query matrix has no rows");
  }
  if (reference.count() == 0) {
    throw Error(ErrorCode::kEmptyReference, "reference has no rows");
  }
  if (reference.dim() != query.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query dim " + std::to_string(query.dim) + " vs reference dim " +
                    std::to_string(reference.dim()));
  }

  const auto& kern = options.portable_kernels ? detail::portable_kernels()
                                              : detail::kernels();
  const bool screened = options.mode == KernelMode::kScreened;
  const std::size_t dim = query.dim;
  const std::size_t nq = query.count();
  const std::size_t query_panels = (nq + kQueryPanel - 1) / kQueryPanel;
  const std::size_t ref_panel = screened ? kRefPanelF32 : kRefPanelF64;
  const std::size_t value_bytes = screened ? sizeof(float) : sizeof(double);

  // Working set: packed queries + per-query state + output ids + tile staging
  // + tile pack, plus an allowance for allocator and worker overhead.
  const std::size_t query_bytes = query_panels * kQueryPanel * dim * value_bytes;
  const std::size_t state_bytes = nq * 3 * sizeof(double);
  std::size_t id_bytes = nq * sizeof(std::string);
  for (const auto& id : query.ids) {
    if (id.size() >= sizeof(std::string)) id_bytes += id.size() + 1;
  }
  const std::size_t per_ref_row = dim * (sizeof(double) + value_bytes) +
                                  sizeof(double);
  const std::size_t fixed = query_bytes + state_bytes + id_bytes + kOverheadBytes;
  std::size_t tile_rows =
      options.memory_budget_bytes > fixed
          ? (options.memory_budget_bytes - fixed) / per_ref_row
          : 0;
  tile_rows = std::max(tile_rows / ref_panel * ref_panel, ref_panel);
  tile_rows = std::min(tile_rows, round_up(reference.count(), ref_panel));

  AlignedBuffer<float> qpack_f32;
  AlignedBuffer<double> qpack_f64;
  AlignedBuffer<float> rpack_f32;
  AlignedBuffer<double> rpack_f64;
  if (screened) {
    qpack_f32 = make_aligned<float>(query_panels * kQueryPanel * dim);
    rpack_f32 = make_aligned<float>(tile_rows * dim);
    detail::pack_panels(query.rows.data(), nq, dim, kQueryPanel,
                        qpack_f32.get());
  } else {
    qpack_f64 = make_aligned<double>(query_panels * kQueryPanel * dim);
    rpack_f64 = make_aligned<double>(tile_rows * dim);
    detail::pack_panels(query.rows.data(), nq, dim, kQueryPanel,
                        qpack_f64.get());
  }
  std::vector<double> staging(tile_rows * dim);
  std::vector<double> ref_norms(tile_rows);

  std::vector<double> best(nq, -kInf);
  std::vector<double> lower(nq, -kInf);  // proven lower bound on the maximum
  std::vector<double> query_coef(nq);    // error bound per unit reference norm
  bool huge_query = false;
  const double coefficient = screen_coefficient(dim);
  for (std::size_t q = 0; q < nq; ++q) {
    const double norm = row_norm(query.rows.data() + q * dim, dim);
    huge_query = huge_query || norm > kMaxScreenNorm;
    query_coef[q] = coefficient * norm;
  }

  std::atomic<std::size_t> rescored{0};
  std::size_t tiles = 0;
  std::size_t reference_rows = 0;
  reference.rewind();
  for (;;) {
    const std::size_t rows = reference.next(staging);
    if (rows == 0) break;
    ++tiles;
    reference_rows += rows;
    const std::size_t ref_panels = (rows + ref_panel - 1) / ref_panel;
    const double* tile = staging.data();

    double max_ref_norm = 0.0;
    if (screened) {
      for (std::size_t r = 0; r < rows; ++r) {
        ref_norms[r] = row_norm(tile + r * dim, dim);
        max_ref_norm = std::max(max_ref_norm, ref_norms[r]);
      }
      detail::pack_panels(tile, rows, dim, ref_panel, rpack_f32.get());
    } else {
      detail::pack_panels(tile, rows, dim, ref_panel, rpack_f64.get());
    }
    const bool exhaustive =
        screened && (huge_query || max_ref_norm > kMaxScreenNorm);

    parallel_chunks(query_panels, options.threads, [&](std::size_t first,
                                                       std::size_t last) {
      alignas(64) float out_f32[kQueryPanel * kRefPanelF32];
      alignas(64) double out_f64[kQueryPanel * kRefPanelF64];
      std::size_t local_rescored = 0;
      for (std::size_t block = first; block < last; block += kPanelsPerBlock) {
        const std::size_t block_end = std::min(last, block + kPanelsPerBlock);
        for (std::size_t rp = 0; rp < ref_panels; ++rp) {
          const std::size_t r0 = rp * ref_panel;
          const std::size_t live = std::min(ref_panel, rows - r0);
          for (std::size_t qp = block; qp < block_end; ++qp) {
            const std::size_t q0 = qp * kQueryPanel;
            const std::size_t q_live = std::min(kQueryPanel, nq - q0);
            if (exhaustive) {
              for (std::size_t i = 0; i < q_live; ++i) {
                const double* qrow = query.rows.data() + (q0 + i) * dim;
                for (std::size_t j = 0; j < live; ++j) {
                  const double s = kern.dot(qrow, tile + (r0 + j) * dim, dim);
                  best[q0 + i] = std::max(best[q0 + i], s);
                }
              }
              local_rescored += q_live * live;
              continue;
            }
            if (!screened) {
              kern.f64(qpack_f64.get() + q0 * dim,
                       rpack_f64.get() + r0 * dim, dim, out_f64);
              for (std::size_t i = 0; i < q_live; ++i) {
                const double* o = out_f64 + i * kRefPanelF64;
                double m = best[q0 + i];
                for (std::size_t j = 0; j < live; ++j) m = std::max(m, o[j]);
                best[q0 + i] = m;
              }
              continue;
            }
            kern.f32(qpack_f32.get() + q0 * dim, rpack_f32.get() + r0 * dim,
                     dim, out_f32);
            for (std::size_t i = 0; i < q_live; ++i) {
              const std::size_t q = q0 + i;
              const float* o = out_f32 + i * kRefPanelF32;
              float m = o[0];
              for (std::size_t j = 1; j < live; ++j) m = std::max(m, o[j]);
              const double slack_max =
                  query_coef[q] * max_ref_norm + kUnderflowSlack;
              if (static_cast<double>(m) + slack_max < lower[q]) continue;
              lower[q] = std::max(lower[q], static_cast<double>(m) - slack_max);
              const double* qrow = query.rows.data() + q * dim;
              for (std::size_t j = 0; j < live; ++j) {
                const double slack =
                    query_coef[q] * ref_norms[r0 + j] + kUnderflowSlack;
                if (static_cast<double>(o[j]) + slack < lower[q]) continue;
                const double s = kern.dot(qrow, tile + (r0 + j) * dim, dim);
                ++local_rescored;
                best[q] = std::max(best[q], s);
                lower[q] = std::max(lower[q], s);
              }
            }
          }
        }
      }
      rescored.fetch_add(local_rescored, std::memory_order_relaxed);
    });
  }
  if (reference_rows == 0) {
    throw Error(ErrorCode::kEmptyReference, "reference yielded no rows");
  }

  NormSimScores out;
  out.side = query.side;
  out.ids = query.ids;
  out.reference_id = options.reference_id;
  out.scores = std::move(best);
  if (options.clamp_unit) {
    for (double& s : out.scores) s = std::clamp(s, -1.0, 1.0);
  }
  if (stats) {
    stats->reference_rows = reference_rows;
    stats->tiles = tiles;
    stats->tile_rows = tile_rows;
    stats->working_bytes = fixed + tile_rows * per_ref_row;
    stats->rescored_pairs = rescored.load();
    stats->kernel = kern.name;
  }
  return out;
}

NormSimScores normsim_scores(const EmbeddingMatrix& query,
                             const EmbeddingMatrix& reference,
                             const ScoreOptions& options, ScoreStats* stats) {
  if (query.side != reference.side) {
    throw Error(ErrorCode::kSideMismatch,
                std::string("query side ") + std::string(to_string(query.side)) +
                    " vs reference side " +
                    std::string(to_string(reference.side)));
  }
  reference.check_shape();
  MatrixRowSource source(reference);
  return normsim_scores(query, source, options, stats);
}

nlohmann::ordered_json NormSimScores::to_json() const {
  nlohmann::ordered_json j;
  j["side"] = to_string(side);
  j["reference"] = reference_id;
  auto& arr = j["scores"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nlohmann::ordered_json item;
    item["id"] = ids[i];
    item["score"] = scores[i];
    arr.push_back(std::move(item));
  }
  return j;
}

NormSimScores NormSimScores::from_json(const nlohmann::json& value) {
  auto fail = [](const std::string& why) {
    return Error(ErrorCode::kSchemaViolation, "scores file: " + why);
  };
  if (!value.is_object()) throw fail("not an object");
  NormSimScores out;
  auto side = value.find("side");
  if (side == value.end() || !side->is_string()) throw fail("missing side");
  auto parsed = side_from_string(side->get<std::string>());
  if (!parsed) throw fail("unknown side");
  out.side = *parsed;
  if (auto ref = value.find("reference");
      ref != value.end() && ref->is_string()) {
    out.reference_id = ref->get<std::string>();
  }
  auto scores = value.find("scores");
  if (scores == value.end() || !scores->is_array()) throw fail("no scores");
  for (const auto& item : *scores) {
    auto id = item.find("id");
    auto score = item.find("score");
    if (id == item.end() || !id->is_string() || score == item.end() ||
        !score->is_number()) {
      throw fail("malformed score entry");
    }
    out.ids.push_back(id->get<std::string>());
    out.scores.push_back(score->get<double>());
  }
  return out;
}

nlohmann::ordered_json SimilarityCurve::to_json() const {
  nlohmann::ordered_json j;
  j["thresholds"] = thresholds;
  j["fractions"] = fractions;
  return j;
}

std::vector<double> default_grid(double step) {
  if (!(step > 0.0) || step > 2.0) {
    throw Error(ErrorCode::kInvalidArgument, "grid step must be in (0, 2]");
  }
  std::vector<double> grid;
  const double inverse = 1.0 / step;
  const double n = std::round(inverse);
  if (std::abs(inverse - n) < 1e-9) {
    const auto steps = static_cast<long long>(n);
    for (long long i = 0; i <= 2 * steps; ++i) {
      grid.push_back(static_cast<double>(i - steps) / static_cast<double>(steps));
    }
    return grid;
  }
  for (long long i = 0;; ++i) {
    const double t = -1.0 + static_cast<double>(i) * step;
    if (t > 1.0 + 1e-12) break;
    grid.push_back(std::min(t, 1.0));
  }
  return grid;
}

SimilarityCurve similarity_curve(std::span<const double> scores,
                                 std::span<const double> grid) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "no scores");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isnan(grid[i]) || (i > 0 && grid[i] < grid[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "grid must be ascending");
    }
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  SimilarityCurve curve;
  curve.thresholds.assign(grid.begin(), grid.end());
  curve.fractions.reserve(grid.size());
  for (double t : grid) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), t);
    const auto at_or_above = static_cast<double>(sorted.end() - first);
    curve.fractions.push_back(at_or_above / n);
  }
  return curve;
}

void write_curve_csv(const SimilarityCurve& curve,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() +
                                           " for writing");
  }
  out << "threshold,fraction\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    out << format_double(curve.thresholds[i]) << ','
        << format_double(curve.fractions[i]) << '\n';
  }
  out.close();
  if (out.fail()) {
    throw Error(ErrorCode::kIoFailure, "write error in " + path.string());
  }
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptyScores, "no scores");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

SideSummary summarize(std::span<const double> scores, const Bands& bands) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "no scores");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  SideSummary s;
  s.count = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  double total = 0.0;
  std::size_t below = 0, above = 0;
  for (double v : sorted) {
    total += v;
    if (v < bands.low) ++below;
    if (v > bands.high) ++above;
  }
  const double n = static_cast<double>(s.count);
  s.mean = total / n;
  s.mass_below = static_cast<double>(below) / n;
  s.mass_above = static_cast<double>(above) / n;
  s.mass_mid = static_cast<double>(s.count - below - above) / n;
  return s;
}

nlohmann::ordered_json SideSummary::to_json() const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["min"] = min;
  j["q1"] = q1;
  j["median"] = median;
  j["q3"] = q3;
  j["max"] = max;
  j["mean"] = mean;
  j["mass_below_low"] = mass_below;
  j["mass_mid"] = mass_mid;
  j["mass_above_high"] = mass_above;
  return j;
}

nlohmann::ordered_json RelevanceNoveltyReport::to_json() const {
  nlohmann::ordered_json j;
  j["bands"] = {{"low", bands.low}, {"high", bands.high}};
  auto side_json = [](const SideSummary& s, const SimilarityCurve& c) {
    auto sj = s.to_json();
    sj["curve"] = c.to_json();
    return sj;
  };
  j["prompt"] = side_json(prompt, prompt_curve);
  j["response"] = side_json(response, response_curve);
  return j;
}

RelevanceNoveltyReport relevance_novelty_report(
    std::span<const double> prompt_scores,
    std::span<const double> response_scores, const Bands& bands,
    std::span<const double> grid) {
  if (prompt_scores.empty() || response_scores.empty()) {
    throw Error(ErrorCode::kEmptyScores, "both sides need scores");
  }
  if (!(bands.low <= bands.high)) {
    throw Error(ErrorCode::kInvalidArgument, "low band exceeds high band");
  }
  std::vector<double> fallback;
  if (grid.empty()) {
    fallback = default_grid();
    grid = fallback;
  }
  RelevanceNoveltyReport report;
  report.bands = bands;
  report.prompt = summarize(prompt_scores, bands);
  report.response = summarize(response_scores, bands);
  report.prompt_curve = similarity_curve(prompt_scores, grid);
  report.response_curve = similarity_curve(response_scores, grid);
  return report;
}

}  // namespace nomad::normsim
