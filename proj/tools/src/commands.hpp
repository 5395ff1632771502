// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nomad/cli/pipeline_config.hpp"
#include "nomad/config.hpp"
#include "nomad/mixer.hpp"
#include "nomad/normsim.hpp"

namespace nomad::cli {

using Json = nlohmann::ordered_json;
using Path = std::filesystem::path;

struct Context {
  Config config;  // effective values after flag overrides
  PipelineConfig settings;
  std::string config_hash;
  bool dry_run = false;
  std::ostream* out = nullptr;
};

// Machine-readable record of one command run, written as
// "<primary output>.summary.json".
class Summary {
 public:
  Summary(std::string command, const Context& ctx);

  void input(const Path& path);
  void output(const Path& path);
  Json& counts() { return counts_; }
  void conserved(bool ok) { conserved_ = ok; }
  bool is_conserved() const { return conserved_; }
  void stage_time(const std::string& name,
                  std::chrono::steady_clock::duration elapsed);

  Json to_json() const;
  // Writes the summary beside `primary` and returns it.
  Json write(const Path& primary) const;
  // Dry run: the plan instead of the outputs. print_plan() also writes it to
  // the context's output stream.
  Json plan() const;
  Json print_plan() const;

 private:
  std::string command_;
  const Context& ctx_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  Json counts_ = Json::object();
  Json timings_ = Json::object();
  bool conserved_ = true;
  std::chrono::steady_clock::time_point start_;
};

Path summary_path(const Path& primary);

// Each command validates its inputs, then either prints its plan (dry run) or
// produces its outputs and summary. The returned JSON is the summary.
Json run_format(const Context& ctx, const Path& in, const Path& out);
Json run_mask(const Context& ctx, const Path& in, const Path& out);
Json run_generate(const Context& ctx, const Path& out);
// Re-serialises an existing raw file (used when replaying generations).
Json run_replay(const Context& ctx, const Path& replay, const Path& out);
Json run_harvest(const Context& ctx, const Path& in, const Path& out,
                 const Path& stats);
Json run_filter(const Context& ctx, const Path& in, const Path& out,
                const Path& rejects, const Path& report);
Json run_subset(const Context& ctx, const Path& in, const Path& out);
Json run_mix(const Context& ctx, const Path& train, const Path& synth,
             const Path& out);
Json run_budget(const Context& ctx, mixer::BudgetMode mode,
                std::size_t baseline_size, std::size_t mixed_size,
                std::size_t mixed_epochs);
Json run_embed(const Context& ctx, const Path& in, normsim::Side side,
               const Path& out);
Json run_score(const Context& ctx, const Path& query, const Path& reference,
               normsim::Side side, const Path& out);
Json run_curve(const Context& ctx, const Path& scores, const Path& out);
Json run_report(const Context& ctx, const Path& prompt_scores,
                const Path& response_scores, const Path& out);
Json run_pipeline(const Context& ctx);

// "<stem>.<side>_curve.csv" beside a report file.
Path report_curve_path(const Path& report, normsim::Side side);

}  // namespace nomad::cli
