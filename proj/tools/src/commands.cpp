// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <spdlog/spdlog.h>

#include "nomad/embedding.hpp"
#include "nomad/error.hpp"
#include "nomad/filters.hpp"
#include "nomad/genclient.hpp"
#include "nomad/jsonl.hpp"
#include "nomad/maskgen.hpp"

namespace nomad::cli {
namespace {

using Clock = std::chrono::steady_clock;

double millis(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

class StageTimer {
 public:
  StageTimer(Summary& summary, std::string name)
      : summary_(summary), name_(std::move(name)), start_(Clock::now()) {}
  ~StageTimer() { summary_.stage_time(name_, Clock::now() - start_); }

 private:
  Summary& summary_;
  std::string name_;
  Clock::time_point start_;
};

void check_input(const Path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kIoFailure, "no such file " + path.string());
  }
}

void prepare_output(const Path& path) {
  const Path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure,
                "cannot create " + parent.string() + ": " + ec.message());
  }
}

nlohmann::json read_json_file(const Path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  auto value = nlohmann::json::parse(in, nullptr, false);
  if (value.is_discarded()) {
    throw Error(ErrorCode::kSchemaViolation, path.string() + " is not JSON");
  }
  return value;
}

bool is_render_error(const Error& e) {
  return e.code() == ErrorCode::kMultiRoundRecord ||
         e.code() == ErrorCode::kEmptyPrompt ||
         e.code() == ErrorCode::kEmptyResponse;
}

Json span_json(const corpus::ByteSpan& span) {
  return Json::array({span.begin, span.end});
}

std::size_t sum_values(const std::map<std::string, std::size_t>& m) {
  std::size_t total = 0;
  for (const auto& [k, v] : m) total += v;
  return total;
}

http::ClientOptions client_options() {
  http::ClientOptions o;
  o.api_key = http::api_key_from_env();
  return o;
}

normsim::NormSimScores load_scores(const Path& path) {
  check_input(path);
  return normsim::NormSimScores::from_json(read_json_file(path));
}

}  // namespace

Path summary_path(const Path& primary) {
  Path p = primary;
  p += ".summary.json";
  return p;
}

Path report_curve_path(const Path& report, normsim::Side side) {
  Path p = report;
  p.replace_extension();
  p += "." + std::string(normsim::to_string(side)) + "_curve.csv";
  return p;
}

Summary::Summary(std::string command, const Context& ctx)
    : command_(std::move(command)), ctx_(ctx), start_(Clock::now()) {}

void Summary::input(const Path& path) { inputs_.push_back(path.string()); }
void Summary::output(const Path& path) { outputs_.push_back(path.string()); }

void Summary::stage_time(const std::string& name, Clock::duration elapsed) {
  timings_[name] = millis(elapsed);
}

Json Summary::to_json() const {
  Json j;
  j["command"] = command_;
  j["config_hash"] = ctx_.config_hash;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["counts"] = counts_;
  j["conserved"] = conserved_;
  Json timings = timings_;
  timings["total"] = millis(Clock::now() - start_);
  j["timings_ms"] = std::move(timings);
  return j;
}

Json Summary::write(const Path& primary) const {
  Json j = to_json();
  const Path path = summary_path(primary);
  prepare_output(path);
  jsonl::write_json_file(path, j);
  spdlog::info("{}: wrote {}", command_, path.string());
  return j;
}

Json Summary::plan() const {
  Json j;
  j["command"] = command_;
  j["dry_run"] = true;
  j["config_hash"] = ctx_.config_hash;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  return j;
}

Json Summary::print_plan() const {
  Json j = plan();
  if (ctx_.out) *ctx_.out << j.dump(2) << '\n';
  return j;
}

Json run_format(const Context& ctx, const Path& in, const Path& out) {
  Summary s("format", ctx);
  s.input(in);
  s.output(out);
  check_input(in);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  auto reader = jsonl::open_records(in);
  jsonl::Writer writer(out);
  std::map<std::string, std::size_t> failed;
  {
    StageTimer t(s, "render");
    const auto opts = ctx.settings.template_options();
    while (auto record = reader.next()) {
      try {
        const auto rendered = corpus::render_unified(*record, opts);
        Json j;
        j["id"] = record->id;
        j["text"] = rendered.text;
        j["prompt_span"] = span_json(rendered.prompt_span);
        j["response_span"] = span_json(rendered.response_span);
        writer.write(j);
      } catch (const Error& e) {
        if (!is_render_error(e)) throw;
        ++failed[std::string(to_string(e.code()))];
      }
    }
  }
  writer.close();
  s.counts()["input"] = reader.stats().read;
  s.counts()["skipped_lines"] = reader.stats().skipped;
  s.counts()["rendered"] = writer.count();
  s.counts()["failed"] = failed;
  s.conserved(writer.count() + sum_values(failed) == reader.stats().read);
  return s.write(out);
}

Json run_mask(const Context& ctx, const Path& in, const Path& out) {
  Summary s("mask", ctx);
  s.input(in);
  s.output(out);
  check_input(in);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  auto reader = jsonl::open_records(in);
  jsonl::Writer writer(out);
  std::map<std::string, std::size_t> failed;
  double coverage_sum = 0.0;
  {
    StageTimer t(s, "mask");
    const auto opts = ctx.settings.mask_options();
    const auto mode = ctx.settings.mask.mode;
    while (auto record = reader.next()) {
      try {
        auto example = maskgen::emit_masks(*record, mode, opts);
        if (auto bad = maskgen::check_spans(example)) {
          throw Error(ErrorCode::kSchemaViolation,
                      "span invariant broken for " + record->id + ": " + *bad);
        }
        coverage_sum += maskgen::mask_coverage(example);
        writer.write(maskgen::to_json(example));
      } catch (const Error& e) {
        if (!is_render_error(e)) throw;
        ++failed[std::string(to_string(e.code()))];
      }
    }
  }
  writer.close();
  s.counts()["mode"] = maskgen::to_string(ctx.settings.mask.mode);
  s.counts()["input"] = reader.stats().read;
  s.counts()["skipped_lines"] = reader.stats().skipped;
  s.counts()["emitted"] = writer.count();
  s.counts()["failed"] = failed;
  s.counts()["mean_coverage"] =
      writer.count() ? coverage_sum / static_cast<double>(writer.count()) : 0.0;
  s.conserved(writer.count() + sum_values(failed) == reader.stats().read);
  return s.write(out);
}

Json run_generate(const Context& ctx, const Path& out) {
  Summary s("generate", ctx);
  s.output(out);
  const auto& g = ctx.settings.generation;
  if (g.endpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "generation.endpoint is not set");
  }
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  gen::GenerateOptions opts;
  opts.parallelism = g.parallelism;
  opts.retry = ctx.settings.retry_policy();
  const std::string endpoint = g.endpoint;
  const auto client = client_options();
  gen::TransportFactory factory = [endpoint, client] {
    return http::make_transport(endpoint, client);
  };
  spdlog::info("generate: {} completions from {}", g.params.count, endpoint);
  jsonl::Writer writer(out);
  gen::GenerateStats stats;
  {
    StageTimer t(s, "generate");
    stats = gen::generate_batch(
        factory, g.params, opts,
        [&](gen::RawGeneration raw) { writer.write(gen::to_json(raw)); });
  }
  writer.close();
  s.counts()["requested"] = stats.requested;
  s.counts()["succeeded"] = stats.succeeded;
  s.counts()["failed"] = stats.failed;
  s.conserved(stats.succeeded + stats.failed == stats.requested &&
              writer.count() == stats.requested);
  if (stats.failed) spdlog::warn("generate: {} requests failed", stats.failed);
  return s.write(out);
}

Json run_replay(const Context& ctx, const Path& replay, const Path& out) {
  Summary s("replay", ctx);
  s.input(replay);
  s.output(out);
  check_input(replay);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  std::error_code ec;
  const bool same = std::filesystem::exists(out, ec) &&
                    std::filesystem::equivalent(replay, out, ec);
  jsonl::Reader<gen::RawGeneration> reader(replay, &gen::raw_from_json);
  std::size_t written = 0;
  {
    StageTimer t(s, "replay");
    if (same) {
      while (reader.next()) ++written;
    } else {
      jsonl::Writer writer(out);
      while (auto raw = reader.next()) writer.write(gen::to_json(*raw));
      writer.close();
      written = writer.count();
    }
  }
  s.counts()["raw"] = written;
  s.counts()["skipped_lines"] = reader.stats().skipped;
  s.conserved(written == reader.stats().read);
  return s.write(out);
}

Json run_harvest(const Context& ctx, const Path& in, const Path& out,
                 const Path& stats_path) {
  Summary s("harvest", ctx);
  s.input(in);
  s.output(out);
  if (!stats_path.empty()) s.output(stats_path);
  check_input(in);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  gen::HarvestOptions opts;
  opts.template_options = ctx.settings.template_options();
  opts.meta = gen::params_meta(ctx.settings.generation.params);
  jsonl::Reader<gen::RawGeneration> reader(in, &gen::raw_from_json);
  jsonl::Writer writer(out);
  gen::HarvestStats stats;
  {
    StageTimer t(s, "harvest");
    stats = gen::harvest([&] { return reader.next(); },
                         [&](corpus::ChatRecord r) {
                           writer.write(corpus::to_json(r));
                         },
                         opts);
  }
  writer.close();
  if (!stats_path.empty()) {
    prepare_output(stats_path);
    jsonl::write_json_file(stats_path, stats.to_json());
  }
  s.counts() = stats.to_json();
  s.counts()["skipped_lines"] = reader.stats().skipped;
  s.conserved(stats.conserved() && writer.count() == stats.valid_count);
  spdlog::info("harvest: {} raw, {} valid", stats.raw_count, stats.valid_count);
  return s.write(out);
}

Json run_filter(const Context& ctx, const Path& in, const Path& out,
                const Path& rejects, const Path& report_path) {
  Summary s("filter", ctx);
  s.input(in);
  s.output(out);
  if (!rejects.empty()) s.output(rejects);
  if (!report_path.empty()) s.output(report_path);
  check_input(in);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  auto reader = jsonl::open_records(in);
  jsonl::Writer kept(out);
  std::optional<jsonl::Writer> rejected;
  if (!rejects.empty()) {
    prepare_output(rejects);
    rejected.emplace(rejects);
  }
  filters::ApplyOptions opts;
  opts.threads = ctx.settings.run.threads;
  filters::FilterReport report;
  {
    StageTimer t(s, "filter");
    report = filters::apply_filters(
        [&] { return reader.next(); },
        [&](corpus::ChatRecord r) { kept.write(corpus::to_json(r)); },
        [&](corpus::ChatRecord r) {
          if (rejected) rejected->write(corpus::to_json(r));
        },
        ctx.settings.filter.config, opts);
  }
  kept.close();
  if (rejected) rejected->close();
  if (!report_path.empty()) {
    prepare_output(report_path);
    jsonl::write_json_file(report_path, report.to_json());
  }
  s.counts() = report.to_json();
  s.counts()["skipped_lines"] = reader.stats().skipped;
  s.conserved(report.conserved() && kept.count() == report.kept_count);
  spdlog::info("filter: kept {} of {}", report.kept_count, report.input_count);
  return s.write(out);
}

Json run_subset(const Context& ctx, const Path& in, const Path& out) {
  Summary s("subset", ctx);
  s.input(in);
  s.output(out);
  check_input(in);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  mixer::SubsetPlan plan{ctx.settings.subset.k, ctx.settings.subset.seed};
  auto reader = jsonl::open_records(in);
  jsonl::Writer writer(out);
  mixer::SubsetStats stats;
  {
    StageTimer t(s, "subset");
    stats = mixer::sample_subset(
        [&] { return reader.next(); }, plan,
        [&](corpus::ChatRecord r) { writer.write(corpus::to_json(r)); });
  }
  writer.close();
  s.counts()["k"] = plan.k;
  s.counts()["seed"] = plan.seed;
  s.counts()["source_count"] = stats.source_count;
  s.counts()["selected"] = stats.selected;
  s.counts()["skipped_lines"] = reader.stats().skipped;
  s.conserved(stats.selected == plan.k && writer.count() == plan.k);
  return s.write(out);
}

Json run_mix(const Context& ctx, const Path& train, const Path& synth,
             const Path& out) {
  Summary s("mix", ctx);
  s.input(train);
  s.input(synth);
  s.output(out);
  check_input(train);
  check_input(synth);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  mixer::MixPlan plan;
  plan.sources = {{train, corpus::Source::kTrain},
                  {synth, corpus::Source::kSynthesis}};
  plan.shuffle_seed = ctx.settings.mix.seed;
  jsonl::Writer writer(out);
  mixer::MixStats stats;
  {
    StageTimer t(s, "mix");
    stats = mixer::mix(plan, [&](corpus::ChatRecord r) {
      writer.write(corpus::to_json(r));
    });
  }
  writer.close();
  s.counts()["seed"] = plan.shuffle_seed;
  s.counts()["train"] = stats.source_counts.at(0);
  s.counts()["synthesis"] = stats.source_counts.at(1);
  s.counts()["output"] = stats.output_count;
  s.counts()["skipped_lines"] = stats.skipped_lines;
  s.conserved(stats.conserved() && writer.count() == stats.output_count);
  return s.write(out);
}

Json run_budget(const Context& ctx, mixer::BudgetMode mode,
                std::size_t baseline_size, std::size_t mixed_size,
                std::size_t mixed_epochs) {
  const auto budget =
      mixer::epoch_budget(mode, baseline_size, mixed_size, mixed_epochs);
  Json j = budget.to_json();
  if (ctx.out) *ctx.out << j.dump(2) << '\n';
  return j;
}

Json run_embed(const Context& ctx, const Path& in, normsim::Side side,
               const Path& out) {
  Summary s("embed", ctx);
  s.input(in);
  s.output(out);
  const auto& e = ctx.settings.embedding;
  if (e.endpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "embedding.endpoint is not set");
  }
  check_input(in);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  std::size_t skipped = 0;
  const auto records = jsonl::read_records(in, &skipped);
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  normsim::collect_side(records, side, ids, texts);
  normsim::EmbedOptions opts;
  opts.model = e.model;
  opts.batch_size = e.batch_size;
  opts.retry = ctx.settings.retry_policy();
  opts.normalize = ctx.settings.normsim.normalize;
  auto transport = http::make_transport(e.endpoint, client_options());
  normsim::EmbeddingMatrix matrix;
  {
    StageTimer t(s, "embed");
    matrix = normsim::embed_via_endpoint(ids, texts, *transport, side, opts);
  }
  normsim::save_embeddings(matrix, out, e.storage);
  s.counts()["side"] = normsim::to_string(side);
  s.counts()["records"] = records.size();
  s.counts()["rows"] = matrix.count();
  s.counts()["dim"] = matrix.dim;
  s.counts()["skipped_lines"] = skipped;
  s.conserved(matrix.count() == records.size());
  return s.write(out);
}

Json run_score(const Context& ctx, const Path& query, const Path& reference,
               normsim::Side side, const Path& out) {
  Summary s("normsim score", ctx);
  s.input(query);
  s.input(reference);
  s.output(out);
  check_input(query);
  check_input(reference);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  const bool normalize = ctx.settings.normsim.normalize;
  normsim::LoadOptions load;
  load.normalize = normalize;
  load.side = side;
  const auto q = normsim::load_embeddings(query, load);
  normsim::EmbeddingFileReader ref(reference, normalize);
  normsim::ScoreStats stats;
  normsim::NormSimScores scores;
  {
    StageTimer t(s, "score");
    scores = normsim::normsim_scores(q, ref, ctx.settings.score_options(), &stats);
  }
  jsonl::write_json_file(out, scores.to_json());

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  for (double v : scores.scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  s.counts()["side"] = normsim::to_string(side);
  s.counts()["query_rows"] = q.count();
  s.counts()["reference_rows"] = stats.reference_rows;
  s.counts()["dim"] = q.dim;
  s.counts()["scores"] = scores.scores.size();
  s.counts()["min"] = lo;
  s.counts()["max"] = hi;
  s.counts()["mean"] = sum / static_cast<double>(scores.scores.size());
  s.counts()["kernel"] = stats.kernel;
  s.counts()["tiles"] = stats.tiles;
  s.counts()["tile_rows"] = stats.tile_rows;
  s.counts()["working_bytes"] = stats.working_bytes;
  s.counts()["rescored_pairs"] = stats.rescored_pairs;
  s.conserved(scores.scores.size() == q.count());
  spdlog::info("normsim score: {} x {} rows, kernel {}", q.count(),
               stats.reference_rows, stats.kernel);
  return s.write(out);
}

Json run_curve(const Context& ctx, const Path& scores_path, const Path& out) {
  Summary s("normsim curve", ctx);
  s.input(scores_path);
  s.output(out);
  check_input(scores_path);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  const auto scores = load_scores(scores_path);
  const auto grid = normsim::default_grid(ctx.settings.normsim.grid_step);
  const auto curve = normsim::similarity_curve(scores.scores, grid);
  normsim::write_curve_csv(curve, out);
  s.counts()["side"] = normsim::to_string(scores.side);
  s.counts()["scores"] = scores.scores.size();
  s.counts()["grid_points"] = curve.thresholds.size();
  return s.write(out);
}

Json run_report(const Context& ctx, const Path& prompt_scores,
                const Path& response_scores, const Path& out) {
  Summary s("report", ctx);
  s.input(prompt_scores);
  s.input(response_scores);
  s.output(out);
  const Path prompt_csv = report_curve_path(out, normsim::Side::kPrompt);
  const Path response_csv = report_curve_path(out, normsim::Side::kResponse);
  s.output(prompt_csv);
  s.output(response_csv);
  check_input(prompt_scores);
  check_input(response_scores);
  if (ctx.dry_run) return s.print_plan();
  prepare_output(out);

  const auto p = load_scores(prompt_scores);
  const auto r = load_scores(response_scores);
  const auto grid = normsim::default_grid(ctx.settings.normsim.grid_step);
  const auto report = normsim::relevance_novelty_report(
      p.scores, r.scores, ctx.settings.bands(), grid);
  jsonl::write_json_file(out, report.to_json());
  normsim::write_curve_csv(report.prompt_curve, prompt_csv);
  normsim::write_curve_csv(report.response_curve, response_csv);

  auto mass = [](const normsim::SideSummary& x) {
    return x.mass_below + x.mass_mid + x.mass_above;
  };
  s.counts()["prompt_scores"] = report.prompt.count;
  s.counts()["response_scores"] = report.response.count;
  s.counts()["prompt_median"] = report.prompt.median;
  s.counts()["response_median"] = report.response.median;
  s.conserved(std::abs(mass(report.prompt) - 1.0) <= 1e-9 &&
              std::abs(mass(report.response) - 1.0) <= 1e-9);
  return s.write(out);
}

}  // namespace nomad::cli
