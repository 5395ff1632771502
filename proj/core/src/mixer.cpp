// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/mixer.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "nomad/error.hpp"
#include "nomad/jsonl.hpp"
#include "nomad/random.hpp"

namespace nomad::mixer {

SubsetStats sample_subset(const Source<corpus::ChatRecord>& input,
                          const SubsetPlan& plan,
                          const Sink<corpus::ChatRecord>& out) {
  if (plan.k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  Rng rng(plan.seed);
  std::vector<std::pair<std::size_t, corpus::ChatRecord>> reservoir;
  reservoir.reserve(plan.k);
  std::size_t seen = 0;
  while (auto record = input()) {
    if (seen < plan.k) {
      reservoir.emplace_back(seen, std::move(*record));
    } else {
      const std::uint64_t slot = rng.below(seen + 1);
      if (slot < plan.k) reservoir[slot] = {seen, std::move(*record)};
    }
    ++seen;
  }
  if (seen < plan.k) {
    throw Error(ErrorCode::kSourceTooSmall,
                "need " + std::to_string(plan.k) + " records, source has " +
                    std::to_string(seen));
  }
  std::sort(reservoir.begin(), reservoir.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [position, record] : reservoir) out(std::move(record));
  return SubsetStats{seen, reservoir.size()};
}

std::vector<corpus::ChatRecord> mix_records(std::vector<TaggedRecords> inputs,
                                            std::uint64_t shuffle_seed) {
  std::size_t total = 0;
  for (const auto& in : inputs) total += in.records.size();
  std::vector<corpus::ChatRecord> mixed;
  mixed.reserve(total);
  std::unordered_set<std::string> ids;
  ids.reserve(total);
  for (auto& in : inputs) {
    const std::string prefix = std::string(corpus::to_string(in.tag)) + ":";
    for (auto& record : in.records) {
      record.id = prefix + record.id;
      record.source = in.tag;
      if (!ids.insert(record.id).second) {
        throw Error(ErrorCode::kDuplicateId, "duplicate id " + record.id);
      }
      mixed.push_back(std::move(record));
    }
  }
  Rng rng(shuffle_seed);
  for (std::size_t i = mixed.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(mixed[i - 1], mixed[j]);
  }
  return mixed;
}

bool MixStats::conserved() const {
  return std::accumulate(source_counts.begin(), source_counts.end(),
                         std::size_t{0}) == output_count;
}

MixStats mix(const MixPlan& plan, const Sink<corpus::ChatRecord>& out) {
  if (plan.sources.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mix needs at least one source");
  }
  MixStats stats;
  std::vector<TaggedRecords> inputs;
  for (const auto& source : plan.sources) {
    TaggedRecords in;
    in.tag = source.tag;
    in.records = jsonl::read_records(source.path, &stats.skipped_lines);
    stats.source_counts.push_back(in.records.size());
    inputs.push_back(std::move(in));
  }
  auto mixed = mix_records(std::move(inputs), plan.shuffle_seed);
  for (auto& record : mixed) {
    out(std::move(record));
    ++stats.output_count;
  }
  return stats;
}

std::string_view to_string(BudgetMode mode) {
  return mode == BudgetMode::kEqualEpoch ? "equal_epoch" : "equal_compute";
}

std::optional<BudgetMode> budget_mode_from_string(std::string_view text) {
  if (text == "equal_epoch" || text == "equal-epoch") {
    return BudgetMode::kEqualEpoch;
  }
  if (text == "equal_compute" || text == "equal-compute") {
    return BudgetMode::kEqualCompute;
  }
  return std::nullopt;
}

nlohmann::ordered_json EpochBudget::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["mode"] = to_string(mode);
  j["baseline_size"] = baseline_size;
  j["mixed_size"] = mixed_size;
  j["mixed_epochs"] = mixed_epochs;
  j["compute_ratio"] = compute_ratio;
  return j;
}

EpochBudget epoch_budget(BudgetMode mode, std::size_t baseline_size,
                         std::size_t mixed_size, std::size_t mixed_epochs) {
  if (baseline_size == 0 || mixed_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sizes must be positive");
  }
  if (mixed_epochs == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mixed_epochs must be >= 1");
  }
  EpochBudget b;
  b.mode = mode;
  b.baseline_size = baseline_size;
  b.mixed_size = mixed_size;
  b.mixed_epochs = mixed_epochs;
  b.compute_ratio = static_cast<double>(mixed_epochs) *
                    static_cast<double>(mixed_size) /
                    static_cast<double>(baseline_size);
  if (mode == BudgetMode::kEqualEpoch) {
    b.epochs = mixed_epochs;
    return b;
  }
  __extension__ using Wide = unsigned __int128;
  const Wide num = static_cast<Wide>(mixed_epochs) * mixed_size;
  const Wide den = baseline_size;
  Wide q = num / den;
  const Wide twice_rem = (num % den) * 2;
  if (twice_rem > den || (twice_rem == den && (q & 1) != 0)) ++q;
  b.epochs = std::max<std::size_t>(static_cast<std::size_t>(q), 1);
  return b;
}

}  // namespace nomad::mixer
