// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/genclient.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "nomad/error.hpp"

namespace nomad::gen {

void GenParams::validate() const {
  if (prefix.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prefix");
  if (!(temperature >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
  }
  if (max_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  }
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "count must be >= 1");
}

nlohmann::json GenParams::request_body(std::size_t index) const {
  nlohmann::json body;
  if (!model.empty()) body["model"] = model;
  body["prompt"] = prefix;
  body["temperature"] = temperature;
  body["top_p"] = top_p;
  body["max_tokens"] = max_tokens;
  body["n"] = 1;
  if (seed) body["seed"] = *seed + index;
  if (!stop.empty()) body["stop"] = stop;
  return body;
}

nlohmann::ordered_json to_json(const RawGeneration& raw) {
  nlohmann::ordered_json j;
  j["index"] = raw.index;
  j["text"] = raw.text;
  j["finish_reason"] = raw.finish_reason;
  if (!raw.endpoint_meta.empty()) {
    auto& meta = j["endpoint_meta"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : raw.endpoint_meta) meta[k] = v;
  }
  return j;
}

std::optional<RawGeneration> raw_from_json(const nlohmann::json& value) {
  if (!value.is_object()) return std::nullopt;
  auto index = value.find("index");
  auto text = value.find("text");
  auto finish = value.find("finish_reason");
  if (index == value.end() || !index->is_number_unsigned() ||
      text == value.end() || !text->is_string() || finish == value.end() ||
      !finish->is_string()) {
    return std::nullopt;
  }
  RawGeneration raw;
  raw.index = index->get<std::size_t>();
  raw.text = text->get<std::string>();
  raw.finish_reason = finish->get<std::string>();
  if (auto meta = value.find("endpoint_meta"); meta != value.end()) {
    if (!meta->is_object()) return std::nullopt;
    for (const auto& [k, v] : meta->items()) {
      if (!v.is_string()) return std::nullopt;
      raw.endpoint_meta.emplace(k, v.get<std::string>());
    }
  }
  return raw;
}

namespace {

RawGeneration decode_completion(std::size_t index, const std::string& prefix,
                                const nlohmann::json& reply) {
  auto choices = reply.find("choices");
  if (choices == reply.end() || !choices->is_array() || choices->empty() ||
      !(*choices)[0].is_object()) {
    throw Error(ErrorCode::kEndpointProtocol, "reply without choices");
  }
  const auto& choice = (*choices)[0];
  auto text = choice.find("text");
  if (text == choice.end() || !text->is_string()) {
    throw Error(ErrorCode::kEndpointProtocol, "choice without text");
  }
  RawGeneration raw;
  raw.index = index;
  raw.text = prefix + text->get<std::string>();
  auto finish = choice.find("finish_reason");
  raw.finish_reason = (finish != choice.end() && finish->is_string())
                          ? finish->get<std::string>()
                          : "unknown";
  if (auto model = reply.find("model");
      model != reply.end() && model->is_string()) {
    raw.endpoint_meta["model"] = model->get<std::string>();
  }
  return raw;
}

RawGeneration failed_generation(std::size_t index, const Error& error) {
  RawGeneration raw;
  raw.index = index;
  raw.finish_reason = std::string(kErrorFinishReason);
  raw.endpoint_meta["error"] = std::string(to_string(error.code()));
  raw.endpoint_meta["detail"] = error.detail();
  return raw;
}

RawGeneration request_one(http::Transport& transport, const GenParams& params,
                          const http::RetryPolicy& retry, std::size_t index) {
  const auto reply =
      http::post_json(transport, "/completions", params.request_body(index),
                      retry);
  return decode_completion(index, params.prefix, reply);
}

}  // namespace

GenerateStats generate_batch(const TransportFactory& factory,
                             const GenParams& params,
                             const GenerateOptions& options,
                             const Sink<RawGeneration>& sink) {
  params.validate();
  GenerateStats stats;
  stats.requested = params.count;
  auto account = [&](const RawGeneration& raw) {
    if (raw.finish_reason == kErrorFinishReason) {
      ++stats.failed;
    } else {
      ++stats.succeeded;
    }
  };

  {
    auto transport = factory();
    RawGeneration first;
    try {
      first = request_one(*transport, params, options.retry, 0);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEndpointUnreachable) throw;
      first = failed_generation(0, e);
    }
    account(first);
    sink(std::move(first));
  }
  if (params.count == 1) return stats;

  const std::size_t workers =
      std::clamp<std::size_t>(options.parallelism, 1, params.count - 1);
  const std::size_t window = workers * 4;

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, RawGeneration> ready;
  std::size_t next_request = 1;
  std::size_t next_emit = 1;
  std::exception_ptr failure;

  auto worker = [&] {
    std::unique_ptr<http::Transport> transport;
    try {
      transport = factory();
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      cv.notify_all();
      return;
    }
    for (;;) {
      std::size_t index;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] {
          return failure || next_request >= params.count ||
                 next_request < next_emit + window;
        });
        if (failure || next_request >= params.count) return;
        index = next_request++;
      }
      RawGeneration raw;
      try {
        raw = request_one(*transport, params, options.retry, index);
      } catch (const Error& e) {
        raw = failed_generation(index, e);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        cv.notify_all();
        return;
      }
      std::lock_guard lock(mu);
      ready.emplace(index, std::move(raw));
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);

  std::exception_ptr emit_failure;
  while (next_emit < params.count) {
    RawGeneration raw;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return failure || ready.contains(next_emit); });
      if (failure) break;
      auto node = ready.extract(next_emit);
      raw = std::move(node.mapped());
    }
    try {
      account(raw);
      sink(std::move(raw));
    } catch (...) {
      std::lock_guard lock(mu);
      emit_failure = std::current_exception();
      failure = emit_failure;
      cv.notify_all();
      break;
    }
    {
      std::lock_guard lock(mu);
      ++next_emit;
    }
    cv.notify_all();
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return stats;
}

std::size_t HarvestStats::discard_total() const {
  std::size_t total = 0;
  for (const auto& [reason, n] : discards) total += n;
  return total;
}

nlohmann::ordered_json HarvestStats::to_json() const {
  nlohmann::ordered_json j;
  j["raw_count"] = raw_count;
  j["valid_count"] = valid_count;
  auto& d = j["discards"] = nlohmann::ordered_json::object();
  for (const auto& [reason, n] : discards) d[reason] = n;
  return j;
}

HarvestStats harvest(const Source<RawGeneration>& raw,
                     const Sink<corpus::ChatRecord>& out,
                     const HarvestOptions& options) {
  HarvestStats stats;
  std::optional<std::size_t> last_index;
  while (auto generation = raw()) {
    if (last_index && generation->index <= *last_index) {
      throw Error(ErrorCode::kSchemaViolation,
                  "raw generation index " + std::to_string(generation->index) +
                      " is not increasing");
    }
    last_index = generation->index;
    ++stats.raw_count;

    corpus::ParseResult parsed =
        generation->finish_reason == kErrorFinishReason
            ? corpus::ParseResult(
                  corpus::Discard{corpus::DiscardReason::kGenerationError})
            : corpus::parse_first_round(generation->text,
                                        options.template_options);
    if (auto* discard = std::get_if<corpus::Discard>(&parsed)) {
      ++stats.discards[std::string(to_string(discard->reason))];
      continue;
    }
    auto record = std::get<corpus::ChatRecord>(std::move(parsed));
    record.id = options.id_prefix + std::to_string(generation->index);
    record.source = corpus::Source::kSynthesis;
    record.meta = options.meta;
    record.meta["raw_index"] = std::to_string(generation->index);
    record.meta["finish_reason"] = generation->finish_reason;
    ++stats.valid_count;
    out(std::move(record));
  }
  return stats;
}

corpus::Meta params_meta(const GenParams& params) {
  auto number = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  corpus::Meta meta;
  meta["gen_prefix"] = params.prefix;
  meta["gen_temperature"] = number(params.temperature);
  meta["gen_top_p"] = number(params.top_p);
  meta["gen_max_tokens"] = std::to_string(params.max_tokens);
  if (params.seed) meta["gen_seed"] = std::to_string(*params.seed);
  if (!params.model.empty()) meta["gen_model"] = params.model;
  return meta;
}

}  // namespace nomad::gen
