// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/cli/pipeline_config.hpp"

#include <algorithm>
#include <limits>

#include "nomad/error.hpp"

namespace nomad::cli {
namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, key + ": " + why);
}

std::int64_t int_in(const Config& c, const std::string& key,
                    std::int64_t fallback, std::int64_t lo,
                    std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
  const std::int64_t v = c.get_int(key, fallback);
  if (v < lo || v > hi) {
    invalid(key, "must be in [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  }
  return v;
}

std::filesystem::path path_of(const Config& c, const std::string& key) {
  const std::string text = c.get_string(key, "");
  if (text.empty()) return {};
  std::filesystem::path p(text);
  require_file(p, key);
  return p;
}

std::string_view kernel_name(normsim::KernelMode mode) {
  return mode == normsim::KernelMode::kDouble ? "double" : "screened";
}

}  // namespace

void require_file(const std::filesystem::path& path, const std::string& key) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    invalid(key, "no such file '" + path.string() + "'");
  }
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = {
        "template.sep",
        "mask.mode",
        "mask.include_assistant_tag",
        "filter.keywords_file",
        "filter.code_filter",
        "filter.scan",
        "filter.case_insensitive",
        "filter.repeat_filter",
        "filter.repeat_line_threshold",
        "filter.repeat_ngram_max",
        "filter.repeat_ngram_min_count",
        "generation.endpoint",
        "generation.replay",
        "generation.prefix",
        "generation.temperature",
        "generation.top_p",
        "generation.max_tokens",
        "generation.count",
        "generation.seed",
        "generation.model",
        "generation.stop",
        "generation.parallelism",
        "generation.max_attempts",
        "generation.initial_backoff_ms",
        "embedding.source",
        "embedding.endpoint",
        "embedding.model",
        "embedding.batch_size",
        "embedding.storage",
        "embedding.query_prompt",
        "embedding.query_response",
        "embedding.reference_prompt",
        "embedding.reference_response",
        "normsim.memory_budget_mb",
        "normsim.normalize",
        "normsim.kernel",
        "normsim.reference_id",
        "normsim.band_low",
        "normsim.band_high",
        "normsim.grid_step",
        "data.train",
        "data.reference",
        "subset.enabled",
        "subset.k",
        "subset.seed",
        "mix.seed",
        "output.dir",
        "run.threads",
        "run.log_level",
    };
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

PipelineConfig PipelineConfig::from_config(const Config& c) {
  const auto& known = known_keys();
  for (const auto& key : c.keys()) {
    if (!std::binary_search(known.begin(), known.end(), key)) {
      invalid(key, "unknown key");
    }
  }

  PipelineConfig p;

  const std::string sep = c.get_string("template.sep", "newline");
  auto parsed_sep = corpus::separator_from_string(sep);
  if (!parsed_sep) invalid("template.sep", "expected newline or space");
  p.template_.sep = *parsed_sep;

  auto mode = maskgen::mask_mode_from_string(c.get_string("mask.mode", "masked"));
  if (!mode) invalid("mask.mode", "expected masked or nomask");
  p.mask.mode = *mode;
  p.mask.include_assistant_tag = c.get_bool("mask.include_assistant_tag", false);

  auto& f = p.filter.config;
  p.filter.keywords_file = path_of(c, "filter.keywords_file");
  if (!p.filter.keywords_file.empty()) {
    f.code_keywords = filters::load_keyword_file(p.filter.keywords_file);
  }
  f.code_filter = c.get_bool("filter.code_filter", true);
  auto scan = filters::scan_target_from_string(c.get_string("filter.scan", "both"));
  if (!scan) invalid("filter.scan", "expected prompt, response or both");
  f.code_scan_targets = *scan;
  f.case_insensitive = c.get_bool("filter.case_insensitive", false);
  f.repeat_filter = c.get_bool("filter.repeat_filter", true);
  f.repeat_line_threshold =
      static_cast<int>(int_in(c, "filter.repeat_line_threshold", 3, 2, 1 << 20));
  f.repeat_ngram_max =
      static_cast<int>(int_in(c, "filter.repeat_ngram_max", 8, 1, 1 << 20));
  f.repeat_ngram_min_count =
      static_cast<int>(int_in(c, "filter.repeat_ngram_min_count", 5, 2, 1 << 20));
  f.validate();

  auto& g = p.generation;
  g.endpoint = c.get_string("generation.endpoint", "");
  g.replay = path_of(c, "generation.replay");
  g.params.prefix = c.get_string("generation.prefix", g.params.prefix);
  g.params.temperature = c.get_double("generation.temperature", 1.0);
  g.params.top_p = c.get_double("generation.top_p", 0.9);
  g.params.max_tokens =
      static_cast<int>(int_in(c, "generation.max_tokens", 1024, 1, 1 << 30));
  g.params.count =
      static_cast<std::size_t>(int_in(c, "generation.count", 30000, 1));
  if (c.contains("generation.seed")) {
    g.params.seed =
        static_cast<std::uint64_t>(int_in(c, "generation.seed", 0, 0));
  }
  g.params.model = c.get_string("generation.model", "");
  g.params.stop = c.get_strings("generation.stop", g.params.stop);
  try {
    g.params.validate();
  } catch (const Error& e) {
    invalid("generation", e.detail());
  }
  g.parallelism =
      static_cast<std::size_t>(int_in(c, "generation.parallelism", 8, 1, 4096));
  g.max_attempts =
      static_cast<int>(int_in(c, "generation.max_attempts", 3, 1, 100));
  g.initial_backoff_ms = int_in(c, "generation.initial_backoff_ms", 1000, 0,
                                std::int64_t{3600} * 1000);

  auto& e = p.embedding;
  const std::string source = c.get_string("embedding.source", "endpoint");
  if (source == "endpoint") {
    e.source = EmbeddingSource::kEndpoint;
  } else if (source == "file") {
    e.source = EmbeddingSource::kFile;
  } else {
    invalid("embedding.source", "expected endpoint or file");
  }
  e.endpoint = c.get_string("embedding.endpoint", "");
  e.model = c.get_string("embedding.model", "");
  e.batch_size =
      static_cast<std::size_t>(int_in(c, "embedding.batch_size", 64, 1, 1 << 20));
  const std::string storage = c.get_string("embedding.storage", "f32");
  if (storage == "f32") {
    e.storage = normsim::StoragePrecision::kFloat32;
  } else if (storage == "f64") {
    e.storage = normsim::StoragePrecision::kFloat64;
  } else {
    invalid("embedding.storage", "expected f32 or f64");
  }
  e.query_prompt = path_of(c, "embedding.query_prompt");
  e.query_response = path_of(c, "embedding.query_response");
  e.reference_prompt = path_of(c, "embedding.reference_prompt");
  e.reference_response = path_of(c, "embedding.reference_response");

  auto& n = p.normsim;
  n.memory_budget_mb = static_cast<std::size_t>(
      int_in(c, "normsim.memory_budget_mb", 512, 1, std::int64_t{1} << 30));
  n.normalize = c.get_bool("normsim.normalize", true);
  const std::string kernel = c.get_string("normsim.kernel", "screened");
  if (kernel == "screened") {
    n.kernel = normsim::KernelMode::kScreened;
  } else if (kernel == "double") {
    n.kernel = normsim::KernelMode::kDouble;
  } else {
    invalid("normsim.kernel", "expected screened or double");
  }
  n.reference_id = c.get_string("normsim.reference_id", "train");
  n.band_low = c.get_double("normsim.band_low", 0.35);
  n.band_high = c.get_double("normsim.band_high", 0.85);
  if (!(n.band_low <= n.band_high)) {
    invalid("normsim.band_low", "must not exceed normsim.band_high");
  }
  n.grid_step = c.get_double("normsim.grid_step", 0.01);
  if (!(n.grid_step > 0.0 && n.grid_step <= 2.0)) {
    invalid("normsim.grid_step", "must be in (0, 2]");
  }

  p.data.train = path_of(c, "data.train");
  p.data.reference = path_of(c, "data.reference");

  p.subset.enabled = c.get_bool("subset.enabled", false);
  p.subset.k = static_cast<std::size_t>(int_in(c, "subset.k", 15000, 1));
  p.subset.seed = static_cast<std::uint64_t>(int_in(c, "subset.seed", 7, 0));
  p.mix.seed = static_cast<std::uint64_t>(int_in(c, "mix.seed", 7, 0));

  p.output.dir = c.get_string("output.dir", "out");
  if (p.output.dir.empty()) invalid("output.dir", "must not be empty");

  p.run.threads = static_cast<unsigned>(int_in(c, "run.threads", 1, 1, 1024));
  p.run.log_level = c.get_string("run.log_level", "info");
  return p;
}

Config PipelineConfig::to_config() const {
  Config c;
  c.set("template.sep", std::string(corpus::to_string(template_.sep)));
  c.set("mask.mode", std::string(maskgen::to_string(mask.mode)));
  c.set("mask.include_assistant_tag", mask.include_assistant_tag);

  const auto& f = filter.config;
  c.set("filter.keywords_file", filter.keywords_file.string());
  c.set("filter.code_filter", f.code_filter);
  c.set("filter.scan", std::string(filters::to_string(f.code_scan_targets)));
  c.set("filter.case_insensitive", f.case_insensitive);
  c.set("filter.repeat_filter", f.repeat_filter);
  c.set("filter.repeat_line_threshold", std::int64_t{f.repeat_line_threshold});
  c.set("filter.repeat_ngram_max", std::int64_t{f.repeat_ngram_max});
  c.set("filter.repeat_ngram_min_count", std::int64_t{f.repeat_ngram_min_count});

  const auto& g = generation;
  c.set("generation.endpoint", g.endpoint);
  c.set("generation.replay", g.replay.string());
  c.set("generation.prefix", g.params.prefix);
  c.set("generation.temperature", g.params.temperature);
  c.set("generation.top_p", g.params.top_p);
  c.set("generation.max_tokens", std::int64_t{g.params.max_tokens});
  c.set("generation.count", static_cast<std::int64_t>(g.params.count));
  if (g.params.seed) {
    c.set("generation.seed", static_cast<std::int64_t>(*g.params.seed));
  }
  c.set("generation.model", g.params.model);
  c.set("generation.stop", g.params.stop);
  c.set("generation.parallelism", static_cast<std::int64_t>(g.parallelism));
  c.set("generation.max_attempts", std::int64_t{g.max_attempts});
  c.set("generation.initial_backoff_ms", g.initial_backoff_ms);

  const auto& e = embedding;
  c.set("embedding.source",
        std::string(e.source == EmbeddingSource::kFile ? "file" : "endpoint"));
  c.set("embedding.endpoint", e.endpoint);
  c.set("embedding.model", e.model);
  c.set("embedding.batch_size", static_cast<std::int64_t>(e.batch_size));
  c.set("embedding.storage",
        std::string(e.storage == normsim::StoragePrecision::kFloat64 ? "f64"
                                                                     : "f32"));
  c.set("embedding.query_prompt", e.query_prompt.string());
  c.set("embedding.query_response", e.query_response.string());
  c.set("embedding.reference_prompt", e.reference_prompt.string());
  c.set("embedding.reference_response", e.reference_response.string());

  c.set("normsim.memory_budget_mb",
        static_cast<std::int64_t>(normsim.memory_budget_mb));
  c.set("normsim.normalize", normsim.normalize);
  c.set("normsim.kernel", std::string(kernel_name(normsim.kernel)));
  c.set("normsim.reference_id", normsim.reference_id);
  c.set("normsim.band_low", normsim.band_low);
  c.set("normsim.band_high", normsim.band_high);
  c.set("normsim.grid_step", normsim.grid_step);

  c.set("data.train", data.train.string());
  c.set("data.reference", data.reference.string());
  c.set("subset.enabled", subset.enabled);
  c.set("subset.k", static_cast<std::int64_t>(subset.k));
  c.set("subset.seed", static_cast<std::int64_t>(subset.seed));
  c.set("mix.seed", static_cast<std::int64_t>(mix.seed));
  c.set("output.dir", output.dir.string());
  c.set("run.threads", static_cast<std::int64_t>(run.threads));
  c.set("run.log_level", run.log_level);
  return c;
}

corpus::TemplateOptions PipelineConfig::template_options() const {
  return {template_.sep};
}

maskgen::MaskOptions PipelineConfig::mask_options() const {
  return {template_options(), mask.include_assistant_tag};
}

normsim::ScoreOptions PipelineConfig::score_options() const {
  normsim::ScoreOptions o;
  o.memory_budget_bytes = normsim.memory_budget_mb << 20;
  o.threads = run.threads;
  o.mode = normsim.kernel;
  o.clamp_unit = normsim.normalize;
  o.reference_id = normsim.reference_id;
  return o;
}

normsim::Bands PipelineConfig::bands() const {
  return {normsim.band_low, normsim.band_high};
}

http::RetryPolicy PipelineConfig::retry_policy() const {
  http::RetryPolicy r;
  r.max_attempts = generation.max_attempts;
  r.initial_backoff = std::chrono::milliseconds(generation.initial_backoff_ms);
  return r;
}

}  // namespace nomad::cli
