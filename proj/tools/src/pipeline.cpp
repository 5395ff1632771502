// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "nomad/embedding.hpp"
#include "nomad/error.hpp"
#include "nomad/jsonl.hpp"

namespace nomad::cli {
namespace {

struct Layout {
  Path dir;
  Path raw, harvested, harvest_stats, filtered, rejected, filter_report;
  Path train_subset, mixed, masks;
  Path query_prompt, query_response, reference_prompt, reference_response;
  Path scores_prompt, scores_response, curve_prompt, curve_response, report;
  Path summary;

  explicit Layout(const Path& d) : dir(d) {
    raw = d / "raw.jsonl";
    harvested = d / "harvested.jsonl";
    harvest_stats = d / "harvest_stats.json";
    filtered = d / "filtered.jsonl";
    rejected = d / "rejected.jsonl";
    filter_report = d / "filter_report.json";
    train_subset = d / "train_subset.jsonl";
    mixed = d / "mixed.jsonl";
    masks = d / "masks.jsonl";
    query_prompt = d / "synth_prompt.emb";
    query_response = d / "synth_response.emb";
    reference_prompt = d / "reference_prompt.emb";
    reference_response = d / "reference_response.emb";
    scores_prompt = d / "scores_prompt.json";
    scores_response = d / "scores_response.json";
    curve_prompt = d / "curve_prompt.csv";
    curve_response = d / "curve_response.csv";
    report = d / "report.json";
    summary = d / "pipeline.summary.json";
  }
};

// Rows of a precomputed query file restricted to the ids of `records`, in
// record order.
Json select_queries(const Context& ctx, const Path& source, const Path& records,
                    normsim::Side side, const Path& out) {
  Summary s("select", ctx);
  s.input(source);
  s.input(records);
  s.output(out);
  if (ctx.dry_run) return s.print_plan();

  normsim::LoadOptions load;
  load.side = side;
  const auto all = normsim::load_embeddings(source, load);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < all.count(); ++i) row_of.emplace(all.ids[i], i);

  normsim::EmbeddingMatrix picked;
  picked.dim = all.dim;
  picked.side = side;
  for (const auto& record : jsonl::read_records(records)) {
    auto it = row_of.find(record.id);
    if (it == row_of.end()) {
      throw Error(ErrorCode::kSchemaViolation,
                  source.string() + " has no embedding for id " + record.id);
    }
    picked.ids.push_back(record.id);
    const auto row = all.row(it->second);
    picked.rows.insert(picked.rows.end(), row.begin(), row.end());
  }
  if (picked.count() == 0) {
    throw Error(ErrorCode::kEmptyMatrix, "no records to score");
  }
  normsim::save_embeddings(picked, out, normsim::StoragePrecision::kFloat64);
  s.counts()["side"] = normsim::to_string(side);
  s.counts()["source_rows"] = all.count();
  s.counts()["selected"] = picked.count();
  return s.write(out);
}

std::size_t count_of(const Json& summary, const char* key) {
  const auto& counts = summary.at("counts");
  return counts.contains(key) ? counts.at(key).get<std::size_t>() : 0;
}

}  // namespace

Json run_pipeline(const Context& ctx) {
  const auto& cfg = ctx.settings;
  const Layout at(cfg.output.dir);

  if (cfg.data.train.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "data.train is not set");
  }
  if (cfg.generation.replay.empty() && cfg.generation.endpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "set generation.endpoint or generation.replay");
  }
  const auto& emb = cfg.embedding;
  if (emb.source == EmbeddingSource::kFile) {
    if (emb.query_prompt.empty() || emb.query_response.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "embedding.source = file needs embedding.query_prompt and "
                  "embedding.query_response");
    }
    if (emb.reference_prompt.empty() || emb.reference_response.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "embedding.source = file needs embedding.reference_prompt "
                  "and embedding.reference_response");
    }
  } else if (emb.endpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "embedding.endpoint is not set");
  }

  Json stages = Json::array();
  auto stage = [&](const char* name, Json summary) {
    Json entry;
    entry["stage"] = name;
    entry["summary"] = std::move(summary);
    stages.push_back(entry);
    return stages.back()["summary"];
  };

  // Inputs produced by earlier stages do not exist yet during a dry run, so
  // only the configured inputs are validated.
  if (ctx.dry_run) {
    auto plan = [&](const char* name, std::vector<Path> in,
                    std::vector<Path> out) {
      Summary s(name, ctx);
      for (const auto& p : in) s.input(p);
      for (const auto& p : out) s.output(p);
      stage(name, s.plan());
    };
    if (cfg.generation.replay.empty()) {
      plan("generate", {}, {at.raw});
    } else {
      plan("replay", {cfg.generation.replay}, {at.raw});
    }
    plan("harvest", {at.raw}, {at.harvested, at.harvest_stats});
    plan("filter", {at.harvested},
         {at.filtered, at.rejected, at.filter_report});
    Path train = cfg.data.train;
    if (cfg.subset.enabled) {
      plan("subset", {train}, {at.train_subset});
      train = at.train_subset;
    }
    plan("mix", {train, at.filtered}, {at.mixed});
    plan("mask", {at.mixed}, {at.masks});
    plan("embed", {at.filtered},
         {at.query_prompt, at.query_response});
    plan("normsim score", {at.query_prompt, at.query_response},
         {at.scores_prompt, at.scores_response});
    plan("normsim curve", {at.scores_prompt, at.scores_response},
         {at.curve_prompt, at.curve_response});
    plan("report", {at.scores_prompt, at.scores_response}, {at.report});
    Json j;
    j["command"] = "pipeline";
    j["dry_run"] = true;
    j["config_hash"] = ctx.config_hash;
    j["stages"] = stages;
    if (ctx.out) *ctx.out << j.dump(2) << '\n';
    return j;
  }

  spdlog::info("pipeline: writing artifacts to {}", at.dir.string());
  const auto start = std::chrono::steady_clock::now();

  const Json raw = cfg.generation.replay.empty()
                       ? stage("generate", run_generate(ctx, at.raw))
                       : stage("replay", run_replay(ctx, cfg.generation.replay,
                                                    at.raw));
  const Json harvested =
      stage("harvest", run_harvest(ctx, at.raw, at.harvested, at.harvest_stats));
  const Json filtered = stage(
      "filter",
      run_filter(ctx, at.harvested, at.filtered, at.rejected, at.filter_report));

  Path train = cfg.data.train;
  if (cfg.subset.enabled) {
    stage("subset", run_subset(ctx, train, at.train_subset));
    train = at.train_subset;
  }
  const Json mixed = stage("mix", run_mix(ctx, train, at.filtered, at.mixed));
  const Json masks = stage("mask", run_mask(ctx, at.mixed, at.masks));

  Path reference_prompt = emb.reference_prompt;
  Path reference_response = emb.reference_response;
  if (emb.source == EmbeddingSource::kFile) {
    stage("select prompt", select_queries(ctx, emb.query_prompt, at.filtered,
                                          normsim::Side::kPrompt,
                                          at.query_prompt));
    stage("select response",
          select_queries(ctx, emb.query_response, at.filtered,
                         normsim::Side::kResponse, at.query_response));
  } else {
    stage("embed prompt",
          run_embed(ctx, at.filtered, normsim::Side::kPrompt, at.query_prompt));
    stage("embed response", run_embed(ctx, at.filtered,
                                      normsim::Side::kResponse,
                                      at.query_response));
    const Path corpus = cfg.data.reference.empty() ? train : cfg.data.reference;
    if (reference_prompt.empty()) {
      stage("embed reference prompt",
            run_embed(ctx, corpus, normsim::Side::kPrompt, at.reference_prompt));
      reference_prompt = at.reference_prompt;
    }
    if (reference_response.empty()) {
      stage("embed reference response",
            run_embed(ctx, corpus, normsim::Side::kResponse,
                      at.reference_response));
      reference_response = at.reference_response;
    }
  }

  const Json scores_prompt =
      stage("score prompt", run_score(ctx, at.query_prompt, reference_prompt,
                                      normsim::Side::kPrompt, at.scores_prompt));
  const Json scores_response = stage(
      "score response", run_score(ctx, at.query_response, reference_response,
                                  normsim::Side::kResponse, at.scores_response));
  stage("curve prompt", run_curve(ctx, at.scores_prompt, at.curve_prompt));
  stage("curve response", run_curve(ctx, at.scores_response, at.curve_response));
  const Json report = stage(
      "report", run_report(ctx, at.scores_prompt, at.scores_response, at.report));

  // Identities that tie the stages together.
  const std::size_t raw_count = count_of(raw, cfg.generation.replay.empty()
                                                  ? "requested"
                                                  : "raw");
  const std::size_t valid = count_of(harvested, "valid_count");
  const std::size_t kept = count_of(filtered, "kept_count");
  Json checks;
  checks["raw_equals_harvest_input"] =
      raw_count == count_of(harvested, "raw_count");
  checks["harvest_valid_equals_filter_input"] =
      valid == count_of(filtered, "input_count");
  checks["filter_kept_equals_mix_synthesis"] =
      kept == count_of(mixed, "synthesis");
  checks["mix_output_equals_masks"] =
      count_of(mixed, "output") == count_of(masks, "emitted");
  checks["prompt_scores_equal_kept"] = kept == count_of(scores_prompt, "scores");
  checks["response_scores_equal_kept"] =
      kept == count_of(scores_response, "scores");
  bool all = true;
  for (const auto& entry : stages) {
    all = all && entry["summary"].value("conserved", true);
  }
  for (const auto& [name, ok] : checks.items()) all = all && ok.get<bool>();

  Json j;
  j["command"] = "pipeline";
  j["config_hash"] = ctx.config_hash;
  j["output_dir"] = at.dir.string();
  j["counts"] = {{"raw", raw_count},
                 {"harvested", valid},
                 {"filtered", kept},
                 {"rejected", count_of(filtered, "dropped_count")},
                 {"mixed", count_of(mixed, "output")},
                 {"masks", count_of(masks, "emitted")},
                 {"prompt_scores", count_of(report, "prompt_scores")},
                 {"response_scores", count_of(report, "response_scores")}};
  j["checks"] = checks;
  j["conserved"] = all;
  j["timings_ms"] = {
      {"total", std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count()}};
  j["stages"] = stages;
  jsonl::write_json_file(at.summary, j);
  if (!all) spdlog::error("pipeline: conservation check failed");
  spdlog::info("pipeline: {} raw -> {} harvested -> {} kept -> {} mixed",
               raw_count, valid, kept, count_of(mixed, "output"));
  return j;
}

}  // namespace nomad::cli
