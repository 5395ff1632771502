// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nomad/config.hpp"
#include "nomad/corpus.hpp"
#include "nomad/filters.hpp"
#include "nomad/genclient.hpp"
#include "nomad/maskgen.hpp"
#include "nomad/normsim.hpp"

namespace nomad::cli {

enum class EmbeddingSource { kEndpoint, kFile };

// Typed view over a Config file. Every key has a default; see
// data/nomad.toml for the documented set.
struct PipelineConfig {
  struct Template {
    corpus::Separator sep = corpus::Separator::kNewline;
  } template_;

  struct Mask {
    maskgen::MaskMode mode = maskgen::MaskMode::kMasked;
    bool include_assistant_tag = false;
  } mask;

  struct Filter {
    std::filesystem::path keywords_file;  // empty: built-in list
    filters::FilterConfig config;
  } filter;

  struct Generation {
    std::string endpoint;
    std::filesystem::path replay;  // replay this raw file instead of calling
    gen::GenParams params;
    std::size_t parallelism = 8;
    int max_attempts = 3;
    std::int64_t initial_backoff_ms = 1000;
  } generation;

  struct Embedding {
    EmbeddingSource source = EmbeddingSource::kEndpoint;
    std::string endpoint;
    std::string model;
    std::size_t batch_size = 64;
    normsim::StoragePrecision storage = normsim::StoragePrecision::kFloat32;
    // Precomputed embeddings. Query files are required for source=file;
    // reference files, when set, skip embedding the reference corpus.
    std::filesystem::path query_prompt;
    std::filesystem::path query_response;
    std::filesystem::path reference_prompt;
    std::filesystem::path reference_response;
  } embedding;

  struct NormSim {
    std::size_t memory_budget_mb = 512;
    bool normalize = true;
    normsim::KernelMode kernel = normsim::KernelMode::kScreened;
    std::string reference_id = "train";
    double band_low = 0.35;
    double band_high = 0.85;
    double grid_step = 0.01;
  } normsim;

  struct Data {
    std::filesystem::path train;      // X_train pool
    std::filesystem::path reference;  // reference corpus; defaults to train
  } data;

  struct Subset {
    bool enabled = false;
    std::size_t k = 15000;
    std::uint64_t seed = 7;
  } subset;

  struct Mix {
    std::uint64_t seed = 7;
  } mix;

  struct Output {
    std::filesystem::path dir = "out";
  } output;

  struct Run {
    unsigned threads = 1;
    std::string log_level = "info";
  } run;

  // Throws InvalidConfig on unknown keys, wrong types and out-of-range values.
  static PipelineConfig from_config(const Config& config);
  // Every key with its effective value.
  Config to_config() const;

  corpus::TemplateOptions template_options() const;
  maskgen::MaskOptions mask_options() const;
  normsim::ScoreOptions score_options() const;
  normsim::Bands bands() const;
  http::RetryPolicy retry_policy() const;
};

// All keys understood by PipelineConfig, sorted.
const std::vector<std::string>& known_keys();

// Throws InvalidConfig naming `key` when `path` does not exist.
void require_file(const std::filesystem::path& path, const std::string& key);

}  // namespace nomad::cli
