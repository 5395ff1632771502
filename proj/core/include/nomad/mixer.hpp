// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/corpus.hpp"
#include "nomad/stream.hpp"

namespace nomad::mixer {

struct SubsetPlan {
  std::size_t k = 1;
  std::uint64_t seed = 0;
};

struct SubsetStats {
  std::size_t source_count = 0;
  std::size_t selected = 0;
};

// Single-pass reservoir sampling: exactly plan.k records, uniformly without
// replacement, emitted in source order. Memory is O(k). Throws
// SourceTooSmall, or InvalidArgument when k is zero.
SubsetStats sample_subset(const Source<corpus::ChatRecord>& input,
                          const SubsetPlan& plan,
                          const Sink<corpus::ChatRecord>& out);

struct TaggedRecords {
  corpus::Source tag = corpus::Source::kTrain;
  std::vector<corpus::ChatRecord> records;
};

// Prefixes every id with "<tag>:", stamps record.source with the tag,
// concatenates in argument order and applies a seeded Fisher-Yates shuffle.
// Throws DuplicateId when two records share an id after prefixing.
std::vector<corpus::ChatRecord> mix_records(std::vector<TaggedRecords> inputs,
                                            std::uint64_t shuffle_seed);

struct MixSource {
  std::filesystem::path path;
  corpus::Source tag = corpus::Source::kTrain;
};

struct MixPlan {
  std::vector<MixSource> sources;
  std::uint64_t shuffle_seed = 0;
};

struct MixStats {
  std::vector<std::size_t> source_counts;  // aligned with plan.sources
  std::size_t skipped_lines = 0;
  std::size_t output_count = 0;

  bool conserved() const;
};

MixStats mix(const MixPlan& plan, const Sink<corpus::ChatRecord>& out);

enum class BudgetMode { kEqualEpoch, kEqualCompute };

std::string_view to_string(BudgetMode mode);
// Accepts "equal_epoch"/"equal-epoch" and "equal_compute"/"equal-compute".
std::optional<BudgetMode> budget_mode_from_string(std::string_view text);

struct EpochBudget {
  BudgetMode mode = BudgetMode::kEqualEpoch;
  std::size_t epochs = 1;
  std::size_t baseline_size = 0;
  std::size_t mixed_size = 0;
  std::size_t mixed_epochs = 0;
  // Exposure ratio of the mixed run relative to one baseline epoch.
  double compute_ratio = 0.0;

  nlohmann::ordered_json to_json() const;
};

// equal_epoch: the baseline trains for mixed_epochs.
// equal_compute: round(mixed_epochs * mixed_size / baseline_size), rounding
// half to even, at least 1. Throws InvalidArgument on zero inputs.
EpochBudget epoch_budget(BudgetMode mode, std::size_t baseline_size,
                         std::size_t mixed_size, std::size_t mixed_epochs);

}  // namespace nomad::mixer
