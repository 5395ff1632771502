// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "nomad/mixer.hpp"
#include "nomad/stream.hpp"

namespace {

std::vector<nomad::corpus::ChatRecord> records(std::size_t count,
                                               const std::string& prefix) {
  std::vector<nomad::corpus::ChatRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(nomad::corpus::make_record(prefix + std::to_string(i),
                                             "prompt", "response"));
  }
  return out;
}

void BM_SampleSubset(benchmark::State& state) {
  const auto input = records(static_cast<std::size_t>(state.range(0)), "t");
  const nomad::mixer::SubsetPlan plan{static_cast<std::size_t>(state.range(1)), 7};
  for (auto _ : state) {
    std::size_t n = 0;
    nomad::mixer::sample_subset(nomad::from_vector(input), plan,
                                [&](nomad::corpus::ChatRecord) { ++n; });
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleSubset)->Args({300000, 15000})->Unit(benchmark::kMillisecond);

void BM_MixRecords(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto train = records(n, "");
  const auto synth = records(n, "");
  for (auto _ : state) {
    auto mixed = nomad::mixer::mix_records(
        {{nomad::corpus::Source::kTrain, train},
         {nomad::corpus::Source::kSynthesis, synth}},
        3);
    benchmark::DoNotOptimize(mixed.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * n));
}
BENCHMARK(BM_MixRecords)->Arg(15000)->Unit(benchmark::kMillisecond);

}  // namespace
