// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/cli/cli.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <iostream>
#include <memory>
#include <type_traits>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "nomad/error.hpp"

namespace nomad::cli {
namespace {

// Command-line options that override a config key when given.
class Overrides {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& flag,
                      const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help + " [" + key + "]");
    apply_.push_back([opt, value, key](Config& c) {
      if (opt->count() == 0) return;
      if constexpr (std::is_same_v<T, std::string>) {
        c.set(key, *value);
      } else if constexpr (std::is_integral_v<T>) {
        c.set(key, static_cast<std::int64_t>(*value));
      } else {
        c.set(key, static_cast<double>(*value));
      }
    });
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& flag,
                    const std::string& key, bool value,
                    const std::string& help) {
    const std::string text = help + " [" + key + "]";
    CLI::Option* opt = app->add_flag(flag, text);
    apply_.push_back([opt, key, value](Config& c) {
      if (opt->count() > 0) c.set(key, value);
    });
    return opt;
  }

  void apply(Config& config) const {
    for (const auto& f : apply_) f(config);
  }

 private:
  std::vector<std::function<void(Config&)>> apply_;
};

struct Args {
  std::string config_path;
  bool dry_run = false;

  std::string in, out, stats, rejects, report;
  std::string train, synth;
  std::string query, ref, scores, prompt_scores, response_scores;
  std::string side = "prompt";
  std::string budget_mode;
  std::size_t baseline_size = 0, mixed_size = 0, mixed_epochs = 0;
};

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kEndpoint: return kExitEndpoint;
    case ErrorCategory::kData: break;
  }
  return kExitData;
}

normsim::Side parse_side(const std::string& text) {
  auto side = normsim::side_from_string(text);
  if (!side) {
    throw Error(ErrorCode::kInvalidArgument,
                "--side must be prompt or response, got '" + text + "'");
  }
  return *side;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err,
                                            const std::string& level) {
  static const std::array<std::string, 7> kLevels = {
      "trace", "debug", "info", "warn", "error", "critical", "off"};
  if (std::find(kLevels.begin(), kLevels.end(), level) == kLevels.end()) {
    throw Error(ErrorCode::kInvalidConfig,
                "run.log_level: unknown level '" + level + "'");
  }
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("nomad", sink);
  logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e [%l] %v");
  logger->set_level(spdlog::level::from_str(level));
  logger->flush_on(spdlog::level::trace);
  return logger;
}

void add_io(CLI::App* app, Args& a, bool needs_in = true) {
  if (needs_in) app->add_option("--in", a.in, "Input JSONL")->required();
  app->add_option("--out", a.out, "Output path")->required();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Synthetic instruction data curation toolkit", "nomad"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  Args a;
  Overrides ov;
  app.add_option("--config", a.config_path, "Config file (TOML subset)");
  ov.option<std::string>(&app, "--log-level", "run.log_level",
                         "trace|debug|info|warn|error|critical|off");
  app.add_flag("--dry-run", a.dry_run,
               "Validate the config and print the plan without writing");
  ov.option<std::int64_t>(&app, "--threads", "run.threads", "Worker threads");

  auto sep = [&](CLI::App* sub) {
    ov.option<std::string>(sub, "--sep", "template.sep", "newline|space");
  };

  auto* format = app.add_subcommand("format", "Render records with the unified template");
  add_io(format, a);
  sep(format);

  auto* mask = app.add_subcommand("mask", "Emit loss spans for masked or nomask training");
  add_io(mask, a);
  sep(mask);
  ov.option<std::string>(mask, "--mode", "mask.mode", "masked|nomask");
  ov.flag(mask, "--include-assistant-tag", "mask.include_assistant_tag", true,
          "Learn the \"Assistant: \" tag in masked mode");

  auto* generate = app.add_subcommand("generate", "Prefix-prompted generation against a completions endpoint");
  add_io(generate, a, false);
  ov.option<std::string>(generate, "--endpoint", "generation.endpoint", "Base URL");
  ov.option<std::int64_t>(generate, "--count", "generation.count", "Generations");
  ov.option<double>(generate, "--temperature", "generation.temperature", "Sampling temperature");
  ov.option<double>(generate, "--top-p", "generation.top_p", "Nucleus mass");
  ov.option<std::int64_t>(generate, "--max-tokens", "generation.max_tokens", "Completion length");
  ov.option<std::int64_t>(generate, "--seed", "generation.seed", "Base seed");
  ov.option<std::string>(generate, "--model", "generation.model", "Model name");
  ov.option<std::string>(generate, "--prefix", "generation.prefix", "Prompt prefix");
  ov.option<std::int64_t>(generate, "--parallelism", "generation.parallelism", "Requests in flight");
  ov.option<std::string>(generate, "--replay", "generation.replay",
                         "Re-emit a stored raw file instead of calling the endpoint");

  auto* harvest = app.add_subcommand("harvest", "Keep the first round of each raw generation");
  add_io(harvest, a);
  harvest->add_option("--stats", a.stats, "HarvestStats JSON");
  sep(harvest);

  auto* filter = app.add_subcommand("filter", "Drop code and repetition records");
  add_io(filter, a);
  filter->add_option("--rejects", a.rejects, "Rejected records JSONL");
  filter->add_option("--report", a.report, "FilterReport JSON");
  ov.option<std::string>(filter, "--keywords", "filter.keywords_file", "Keyword file");
  ov.option<std::string>(filter, "--scan", "filter.scan", "prompt|response|both");
  ov.flag(filter, "--case-insensitive", "filter.case_insensitive", true, "Case-folded keyword match");
  ov.flag(filter, "--no-code-filter", "filter.code_filter", false, "Disable the code filter");
  ov.flag(filter, "--no-repeat-filter", "filter.repeat_filter", false, "Disable the repetition filter");
  ov.option<std::int64_t>(filter, "--repeat-line-threshold", "filter.repeat_line_threshold", "Identical consecutive lines");
  ov.option<std::int64_t>(filter, "--ngram-max", "filter.repeat_ngram_max", "Longest n-gram");
  ov.option<std::int64_t>(filter, "--ngram-min-count", "filter.repeat_ngram_min_count", "Consecutive repeats");

  auto* subset = app.add_subcommand("subset", "Uniform k-subset by reservoir sampling");
  add_io(subset, a);
  ov.option<std::int64_t>(subset, "--k", "subset.k", "Records to keep");
  ov.option<std::int64_t>(subset, "--seed", "subset.seed", "Sampling seed");

  auto* mix = app.add_subcommand("mix", "Tag, concatenate and shuffle train and synthesis data");
  mix->add_option("--train", a.train, "Train JSONL")->required();
  mix->add_option("--synth", a.synth, "Synthesis JSONL")->required();
  mix->add_option("--out", a.out, "Output JSONL")->required();
  ov.option<std::int64_t>(mix, "--seed", "mix.seed", "Shuffle seed");

  auto* budget = app.add_subcommand("budget", "Baseline epochs for equal-epoch or equal-compute runs");
  budget->add_option("--mode", a.budget_mode, "equal-epoch|equal-compute")->required();
  budget->add_option("--baseline-size", a.baseline_size, "Baseline records")->required();
  budget->add_option("--mixed-size", a.mixed_size, "Mixed records")->required();
  budget->add_option("--mixed-epochs", a.mixed_epochs, "Mixed-run epochs")->required();

  auto* embed = app.add_subcommand("embed", "Embed the prompt or response side via an endpoint");
  add_io(embed, a);
  embed->add_option("--side", a.side, "prompt|response")->required();
  ov.option<std::string>(embed, "--endpoint", "embedding.endpoint", "Base URL");
  ov.option<std::string>(embed, "--model", "embedding.model", "Model name");
  ov.option<std::int64_t>(embed, "--batch-size", "embedding.batch_size", "Texts per request");
  ov.option<std::string>(embed, "--storage", "embedding.storage", "f32|f64");

  auto* normsim_cmd = app.add_subcommand("normsim", "NormSim scoring, curves and reports");
  normsim_cmd->require_subcommand(1, 1);
  normsim_cmd->fallthrough();

  auto* score = normsim_cmd->add_subcommand("score", "Max inner product against a reference");
  score->add_option("--query", a.query, "Query embeddings")->required();
  score->add_option("--ref", a.ref, "Reference embeddings")->required();
  score->add_option("--out", a.out, "Scores JSON")->required();
  score->add_option("--side", a.side, "prompt|response");
  ov.option<std::int64_t>(score, "--memory-budget-mb", "normsim.memory_budget_mb", "Working-set cap");
  ov.option<std::string>(score, "--kernel", "normsim.kernel", "screened|double");
  ov.option<std::string>(score, "--reference-id", "normsim.reference_id", "Reference name");
  ov.flag(score, "--raw", "normsim.normalize", false, "Raw inner products, no normalization");

  auto* curve = normsim_cmd->add_subcommand("curve", "Fraction of scores at or above each threshold");
  curve->add_option("--scores", a.scores, "Scores JSON")->required();
  curve->add_option("--out", a.out, "Curve CSV")->required();
  ov.option<double>(curve, "--step", "normsim.grid_step", "Grid step");

  auto add_report = [&](CLI::App* sub) {
    sub->add_option("--prompt-scores", a.prompt_scores, "Prompt-side scores")->required();
    sub->add_option("--response-scores", a.response_scores, "Response-side scores")->required();
    sub->add_option("--out", a.out, "Report JSON")->required();
    ov.option<double>(sub, "--low", "normsim.band_low", "Low band bound");
    ov.option<double>(sub, "--high", "normsim.band_high", "High band bound");
    ov.option<double>(sub, "--step", "normsim.grid_step", "Grid step");
  };
  auto* report_sub = normsim_cmd->add_subcommand("report", "Relevance/novelty report");
  add_report(report_sub);
  auto* report = app.add_subcommand("report", "Same as `normsim report`");
  add_report(report);

  auto* pipeline = app.add_subcommand("pipeline", "generate -> harvest -> filter -> mix -> normsim");
  ov.option<std::string>(pipeline, "--out-dir", "output.dir", "Artifact directory");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();
  for (auto* sub : normsim_cmd->get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "nomad: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    Config config;
    if (!a.config_path.empty()) {
      std::error_code ec;
      if (!std::filesystem::is_regular_file(a.config_path, ec)) {
        throw Error(ErrorCode::kInvalidConfig,
                    "no such config file '" + a.config_path + "'");
      }
      config = Config::load(a.config_path);
    }
    ov.apply(config);

    Context ctx;
    ctx.settings = PipelineConfig::from_config(config);
    ctx.config = ctx.settings.to_config();
    ctx.config_hash = ctx.config.hash();
    ctx.dry_run = a.dry_run;
    ctx.out = &out;

    auto previous = spdlog::default_logger();
    spdlog::set_default_logger(make_logger(err, ctx.settings.run.log_level));
    struct Restore {
      std::shared_ptr<spdlog::logger> logger;
      ~Restore() { spdlog::set_default_logger(logger); }
    } restore{previous};

    if (format->parsed()) {
      run_format(ctx, a.in, a.out);
    } else if (mask->parsed()) {
      run_mask(ctx, a.in, a.out);
    } else if (generate->parsed()) {
      if (ctx.settings.generation.replay.empty()) {
        run_generate(ctx, a.out);
      } else {
        run_replay(ctx, ctx.settings.generation.replay, a.out);
      }
    } else if (harvest->parsed()) {
      run_harvest(ctx, a.in, a.out, a.stats);
    } else if (filter->parsed()) {
      run_filter(ctx, a.in, a.out, a.rejects, a.report);
    } else if (subset->parsed()) {
      run_subset(ctx, a.in, a.out);
    } else if (mix->parsed()) {
      run_mix(ctx, a.train, a.synth, a.out);
    } else if (budget->parsed()) {
      auto mode = mixer::budget_mode_from_string(a.budget_mode);
      if (!mode) {
        throw Error(ErrorCode::kInvalidArgument,
                    "--mode must be equal-epoch or equal-compute");
      }
      run_budget(ctx, *mode, a.baseline_size, a.mixed_size, a.mixed_epochs);
    } else if (embed->parsed()) {
      run_embed(ctx, a.in, parse_side(a.side), a.out);
    } else if (score->parsed()) {
      run_score(ctx, a.query, a.ref, parse_side(a.side), a.out);
    } else if (curve->parsed()) {
      run_curve(ctx, a.scores, a.out);
    } else if (report_sub->parsed() || report->parsed()) {
      run_report(ctx, a.prompt_scores, a.response_scores, a.out);
    } else if (pipeline->parsed()) {
      const Json summary = run_pipeline(ctx);
      if (!a.dry_run && !summary.value("conserved", false)) {
        throw Error(ErrorCode::kSchemaViolation,
                    "pipeline conservation checks failed");
      }
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "nomad: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "nomad: " << e.what() << '\n';
    return kExitData;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace nomad::cli
