// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nomad/error.hpp"
#include "nomad/normsim.hpp"
#include "support.hpp"

namespace nomad::normsim {
namespace {

using testing::Gen;
using testing::uniform;

// Plain double loop over every pair.
std::vector<double> naive_scores(const EmbeddingMatrix& q,
                                 const EmbeddingMatrix& r) {
  std::vector<double> out(q.count(), -INFINITY);
  for (std::size_t i = 0; i < q.count(); ++i) {
    for (std::size_t j = 0; j < r.count(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.dim; ++k) s += q.row(i)[k] * r.row(j)[k];
      out[i] = std::max(out[i], s);
    }
  }
  return out;
}

ScoreOptions with(KernelMode mode, std::size_t budget = std::size_t{64} << 20,
                  unsigned threads = 1, bool portable = false) {
  ScoreOptions o;
  o.mode = mode;
  o.memory_budget_bytes = budget;
  o.threads = threads;
  o.portable_kernels = portable;
  return o;
}

TEST(NormSim, IdenticalAndOrthogonalRows) {
  EmbeddingMatrix q;
  q.ids = {"same", "orth"};
  q.dim = 3;
  q.rows = {1, 0, 0, 0, 0, 1};
  EmbeddingMatrix r;
  r.ids = {"z"};
  r.dim = 3;
  r.rows = {1, 0, 0};
  for (auto mode : {KernelMode::kScreened, KernelMode::kDouble}) {
    const auto s = normsim_scores(q, r, with(mode));
    EXPECT_EQ(s.ids, q.ids);
    EXPECT_EQ(s.scores, (std::vector<double>{1.0, 0.0}));
  }
}

TEST(NormSim, SmallCaseMatchesNaiveOracle) {
  Gen g(5);
  const auto q = testing::random_unit_matrix(g, 5, 20, "q");
  const auto r = testing::random_unit_matrix(g, 20, 20, "r");
  const auto expected = naive_scores(q, r);
  const auto s = normsim_scores(q, r);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.scores[i], expected[i], 1e-9);
}

TEST(NormSim, KernelsAgreeBitwiseProperty) {
  Gen g(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t dim = uniform(g, 1, 80);
    const auto q = testing::random_unit_matrix(g, uniform(g, 1, 40), dim, "q");
    const auto r = testing::random_unit_matrix(g, uniform(g, 1, 300), dim, "r");
    const auto expected = naive_scores(q, r);
    const auto base = normsim_scores(q, r, with(KernelMode::kDouble));
    for (std::size_t i = 0; i < q.count(); ++i) {
      EXPECT_NEAR(base.scores[i], expected[i], 1e-9);
      // Reported values are the sequential FMA dot of some reference row.
      double best = -INFINITY;
      for (std::size_t j = 0; j < r.count(); ++j) {
        best = std::max(best, dot_fma(q.row(i), r.row(j)));
      }
      EXPECT_EQ(base.scores[i], std::clamp(best, -1.0, 1.0));
    }
    for (bool portable : {false, true}) {
      for (auto mode : {KernelMode::kScreened, KernelMode::kDouble}) {
        const auto s = normsim_scores(q, r, with(mode, 64 << 20, 1, portable));
        EXPECT_EQ(s.scores, base.scores) << "dim " << dim;
      }
    }
  }
}

TEST(NormSim, IndependentOfBudgetAndThreads) {
  Gen g(7);
  const auto q = testing::random_unit_matrix(g, 33, 48, "q");
  const auto r = testing::random_unit_matrix(g, 1000, 48, "r");
  const auto base = normsim_scores(q, r, with(KernelMode::kScreened));
  const std::size_t roomy = (std::size_t{1} << 20) + (std::size_t{200} << 10);
  for (std::size_t budget : {std::size_t{1}, std::size_t{40} << 10, roomy}) {
    for (unsigned threads : {1u, 3u}) {
      for (auto mode : {KernelMode::kScreened, KernelMode::kDouble}) {
        ScoreStats stats;
        const auto s =
            normsim_scores(q, r, with(mode, budget, threads), &stats);
        EXPECT_EQ(s.scores, base.scores);
        EXPECT_EQ(stats.reference_rows, 1000u);
        EXPECT_GE(stats.tiles, 1u);
        EXPECT_EQ(stats.tiles,
                  (1000 + stats.tile_rows - 1) / stats.tile_rows);
        if (budget == roomy) {
          EXPECT_LE(stats.working_bytes, budget);
          EXPECT_GT(stats.tiles, 1u);
        }
      }
    }
  }
}

TEST(NormSim, StreamingReferenceMatchesInMemory) {
  testing::TempDir dir;
  Gen g(8);
  const auto q = testing::random_unit_matrix(g, 10, 16, "q");
  const auto r = testing::random_unit_matrix(g, 500, 16, "r");
  save_embeddings(r, dir / "ref.emb", StoragePrecision::kFloat64);
  EmbeddingFileReader reader(dir / "ref.emb", false);
  const auto a = normsim_scores(q, reader, with(KernelMode::kScreened, 30 << 10));
  const auto b = normsim_scores(q, r);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(NormSim, InvariantUnderPermutationAndDuplication) {
  Gen g(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = uniform(g, 2, 32);
    const auto q = testing::random_unit_matrix(g, uniform(g, 1, 20), dim, "q");
    auto r = testing::random_unit_matrix(g, uniform(g, 2, 100), dim, "r");
    const auto base = normsim_scores(q, r);

    std::vector<std::size_t> order(r.count());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), g);
    EmbeddingMatrix shuffled;
    shuffled.dim = dim;
    for (auto j : order) {
      shuffled.ids.push_back(r.ids[j]);
      shuffled.rows.insert(shuffled.rows.end(), r.row(j).begin(), r.row(j).end());
    }
    EXPECT_EQ(normsim_scores(q, shuffled).scores, base.scores);

    auto duplicated = shuffled;
    duplicated.ids.push_back("dup");
    duplicated.rows.insert(duplicated.rows.end(), r.row(0).begin(),
                           r.row(0).end());
    EXPECT_EQ(normsim_scores(q, duplicated).scores, base.scores);

    // Adding rows never lowers a score.
    const auto extra = testing::random_unit_matrix(g, 5, dim, "x");
    auto grown = r;
    grown.ids.insert(grown.ids.end(), extra.ids.begin(), extra.ids.end());
    grown.rows.insert(grown.rows.end(), extra.rows.begin(), extra.rows.end());
    const auto more = normsim_scores(q, grown);
    for (std::size_t i = 0; i < q.count(); ++i) {
      EXPECT_GE(more.scores[i], base.scores[i]);
    }
  }
}

TEST(NormSim, Errors) {
  Gen g(10);
  const auto q = testing::random_unit_matrix(g, 2, 4, "q");
  auto code = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  const auto r5 = testing::random_unit_matrix(g, 2, 5, "r");
  EXPECT_EQ(code([&] { normsim_scores(q, r5); }), ErrorCode::kDimensionMismatch);
  EmbeddingMatrix empty;
  empty.dim = 4;
  EXPECT_EQ(code([&] { normsim_scores(q, empty); }), ErrorCode::kEmptyReference);
  EXPECT_EQ(code([&] { normsim_scores(empty, q); }), ErrorCode::kEmptyMatrix);
  const auto response = testing::random_unit_matrix(g, 2, 4, "r",
                                                     Side::kResponse);
  EXPECT_EQ(code([&] { normsim_scores(q, response); }), ErrorCode::kSideMismatch);
}

TEST(NormSim, ClampOnlyWhenRequested) {
  EmbeddingMatrix q;
  q.ids = {"a"};
  q.dim = 2;
  q.rows = {2.0, 0.0};
  EmbeddingMatrix r = q;
  EXPECT_EQ(normsim_scores(q, r).scores[0], 1.0);
  ScoreOptions raw;
  raw.clamp_unit = false;
  EXPECT_EQ(normsim_scores(q, r, raw).scores[0], 4.0);
}

TEST(NormSimScores, JsonRoundTrip) {
  NormSimScores s;
  s.side = Side::kResponse;
  s.ids = {"a", "b"};
  s.scores = {0.25, -0.125};
  s.reference_id = "train";
  const auto j = s.to_json();
  EXPECT_EQ(j.dump(),
            R"({"side":"response","reference":"train","scores":[{"id":"a","score":0.25},{"id":"b","score":-0.125}]})");
  const auto back = NormSimScores::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.ids, s.ids);
  EXPECT_EQ(back.scores, s.scores);
  EXPECT_EQ(back.side, s.side);
  EXPECT_EQ(back.reference_id, s.reference_id);
}

}  // namespace
}  // namespace nomad::normsim
