// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>

#include "nomad/error.hpp"
#include "nomad/genclient.hpp"
#include "nomad/jsonl.hpp"
#include "support.hpp"

namespace nomad::gen {
namespace {

using testing::MockServer;

GenerateOptions fast_options(std::size_t parallelism = 4) {
  GenerateOptions o;
  o.parallelism = parallelism;
  o.retry.sleep = [](std::chrono::milliseconds) {};
  return o;
}

TransportFactory factory_for(const MockServer& server) {
  const auto url = server.url();
  return [url] { return http::make_transport(url); };
}

// Completion text derived from the request seed, so replies do not depend on
// arrival order.
MockServer::Handler seeded_completions() {
  return [](const nlohmann::json& req) {
    const auto seed = req.at("seed").get<std::uint64_t>();
    return MockServer::completion("Question " + std::to_string(seed) +
                                  "?\nAssistant: Answer " +
                                  std::to_string(seed) + ".");
  };
}

TEST(GenParams, RequestBody) {
  GenParams p;
  p.seed = 40;
  p.model = "m";
  const auto body = p.request_body(2);
  EXPECT_EQ(body.at("prompt"), "User: ");
  EXPECT_EQ(body.at("temperature"), 1.0);
  EXPECT_EQ(body.at("top_p"), 0.9);
  EXPECT_EQ(body.at("max_tokens"), 1024);
  EXPECT_EQ(body.at("n"), 1);
  EXPECT_EQ(body.at("seed"), 42);
  EXPECT_EQ(body.at("model"), "m");
  EXPECT_EQ(body.at("stop"), nlohmann::json::array({"\nUser:"}));

  GenParams bare;
  bare.stop.clear();
  const auto b = bare.request_body(0);
  EXPECT_FALSE(b.contains("seed"));
  EXPECT_FALSE(b.contains("model"));
  EXPECT_FALSE(b.contains("stop"));
}

TEST(GenParams, Validate) {
  GenParams p;
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.temperature = -1;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.count = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.prefix.clear();
  EXPECT_THROW(p.validate(), Error);
}

TEST(GenerateBatch, EmitsInIndexOrder) {
  MockServer server;
  server.on("/completions", seeded_completions());
  GenParams p;
  p.count = 3;
  p.seed = 100;
  std::vector<RawGeneration> out;
  const auto stats =
      generate_batch(factory_for(server), p, fast_options(), into_vector(out));
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].index, i);
    EXPECT_EQ(out[i].text, "User: Question " + std::to_string(100 + i) +
                               "?\nAssistant: Answer " +
                               std::to_string(100 + i) + ".");
    EXPECT_EQ(out[i].finish_reason, "stop");
  }
  EXPECT_EQ(stats.requested, 3u);
  EXPECT_EQ(stats.succeeded, 3u);
  EXPECT_EQ(stats.failed, 0u);
  EXPECT_EQ(server.calls("/completions"), 3u);
}

TEST(GenerateBatch, ManyRequestsWithParallelism) {
  MockServer server;
  server.on("/completions", seeded_completions());
  GenParams p;
  p.count = 200;
  p.seed = 0;
  for (std::size_t par : {1u, 8u}) {
    std::vector<RawGeneration> out;
    generate_batch(factory_for(server), p, fast_options(par), into_vector(out));
    ASSERT_EQ(out.size(), 200u);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out[i].index, i);
      EXPECT_NE(out[i].text.find("Answer " + std::to_string(i) + "."),
                std::string::npos);
    }
  }
}

TEST(GenerateBatch, RetriesThenSucceeds) {
  MockServer server;
  std::atomic<int> calls{0};
  server.on("/completions", [&](const nlohmann::json&) {
    if (calls++ < 2) return MockServer::Reply{503, "{}"};
    return MockServer::completion("Q?\nAssistant: A.");
  });
  GenParams p;
  std::vector<RawGeneration> out;
  std::vector<std::chrono::milliseconds> sleeps;
  auto o = fast_options();
  o.retry.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  generate_batch(factory_for(server), p, o, into_vector(out));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].text, "User: Q?\nAssistant: A.");
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{
                        std::chrono::milliseconds(1000),
                        std::chrono::milliseconds(2000)}));
}

TEST(GenerateBatch, UnreachableEndpointAbortsBeforeEmitting) {
  GenParams p;
  p.count = 5;
  std::vector<RawGeneration> out;
  auto o = fast_options();
  o.retry.max_attempts = 1;
  try {
    generate_batch([] { return http::make_transport("http://127.0.0.1:1/v1"); },
                   p, o, into_vector(out));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEndpointUnreachable);
  }
  EXPECT_TRUE(out.empty());
}

TEST(GenerateBatch, PerItemFailuresBecomeErrorRecords) {
  MockServer server;
  server.on("/completions", [](const nlohmann::json& req) {
    const auto seed = req.at("seed").get<std::uint64_t>();
    if (seed % 3 == 1) return MockServer::Reply{400, R"({"error":"bad"})"};
    return MockServer::completion("Q?\nAssistant: A.");
  });
  GenParams p;
  p.count = 9;
  p.seed = 0;
  std::vector<RawGeneration> out;
  const auto stats =
      generate_batch(factory_for(server), p, fast_options(), into_vector(out));
  ASSERT_EQ(out.size(), 9u);
  EXPECT_EQ(stats.failed, 3u);
  EXPECT_EQ(stats.succeeded, 6u);
  for (const auto& raw : out) {
    if (raw.index % 3 == 1) {
      EXPECT_EQ(raw.finish_reason, kErrorFinishReason);
      EXPECT_TRUE(raw.text.empty());
      EXPECT_EQ(raw.endpoint_meta.at("error"), "EndpointProtocol");
    } else {
      EXPECT_EQ(raw.finish_reason, "stop");
    }
  }
}

TEST(RawJson, RoundTrip) {
  RawGeneration raw{3, "User: x\nAssistant: y", "length", {{"model", "m"}}};
  const auto j = to_json(raw);
  EXPECT_EQ(j.dump(),
            R"({"index":3,"text":"User: x\nAssistant: y","finish_reason":"length","endpoint_meta":{"model":"m"}})");
  EXPECT_EQ(raw_from_json(nlohmann::json::parse(j.dump())), raw);
  EXPECT_FALSE(raw_from_json(nlohmann::json::parse(R"({"index":-1,"text":"","finish_reason":""})")));
  EXPECT_FALSE(raw_from_json(nlohmann::json::parse(R"({"index":1,"text":2,"finish_reason":""})")));
}

std::vector<RawGeneration> ten_raw() {
  std::vector<RawGeneration> raw;
  const char* texts[] = {
      "User: q0\nAssistant: a0",
      "User: q1\nAssistant: a1\nUser: q1b\nAssistant: a1b",
      "User: lonely prompt",
      "User: q3\nAssistant: a3",
      "User: \nAssistant: a4",
      "User: q5\nAssistant: a5",
      "User: q6\nAssistant: a6",
      "User: q7\nAssistant: a7",
      "User: q8\nAssistant: a8",
      "User: q9\nAssistant: a9",
  };
  for (std::size_t i = 0; i < 10; ++i) raw.push_back({i, texts[i], "stop", {}});
  return raw;
}

TEST(Harvest, CountsValidAndDiscards) {
  std::vector<corpus::ChatRecord> out;
  HarvestOptions o;
  o.meta["gen_top_p"] = "0.9";
  const auto stats = harvest(from_vector(ten_raw()), into_vector(out), o);
  EXPECT_EQ(stats.raw_count, 10u);
  EXPECT_EQ(stats.valid_count, 8u);
  EXPECT_EQ(stats.discards.at("no_response"), 1u);
  EXPECT_EQ(stats.discards.at("empty_prompt"), 1u);
  EXPECT_EQ(stats.discard_total(), 2u);
  EXPECT_TRUE(stats.conserved());
  ASSERT_EQ(out.size(), 8u);
  EXPECT_EQ(out[0].id, "synth-0");
  EXPECT_EQ(out[1].prompt(), "q1");
  EXPECT_EQ(out[1].response(), "a1");
  EXPECT_EQ(out[1].source, corpus::Source::kSynthesis);
  EXPECT_EQ(out[1].meta.at("gen_top_p"), "0.9");
  EXPECT_EQ(out[1].meta.at("raw_index"), "1");
  EXPECT_EQ(stats.to_json().dump(),
            R"({"raw_count":10,"valid_count":8,"discards":{"empty_prompt":1,"no_response":1}})");
}

TEST(Harvest, EmptyStreamAndErrors) {
  std::vector<corpus::ChatRecord> out;
  const auto stats = harvest(from_vector(std::vector<RawGeneration>{}),
                             into_vector(out));
  EXPECT_EQ(stats.raw_count, 0u);
  EXPECT_TRUE(stats.conserved());

  std::vector<RawGeneration> raw = {{0, "", "error", {}},
                                    {1, "User: a\nAssistant: b", "stop", {}}};
  const auto s2 = harvest(from_vector(raw), into_vector(out));
  EXPECT_EQ(s2.discards.at("generation_error"), 1u);
  EXPECT_EQ(s2.valid_count, 1u);

  std::vector<RawGeneration> unordered = {{2, "User: a\nAssistant: b", "stop", {}},
                                          {1, "User: a\nAssistant: b", "stop", {}}};
  EXPECT_THROW(harvest(from_vector(unordered), into_vector(out)), Error);
}

TEST(Harvest, ReplayIsDeterministic) {
  testing::TempDir dir;
  {
    jsonl::Writer w(dir / "raw.jsonl");
    for (const auto& r : ten_raw()) w.write(to_json(r));
    w.close();
  }
  auto harvest_file = [&](const std::string& name) {
    jsonl::Reader<RawGeneration> reader(dir / "raw.jsonl", raw_from_json);
    jsonl::Writer w(dir / name);
    harvest([&] { return reader.next(); },
            [&](corpus::ChatRecord r) { w.write(corpus::to_json(r)); });
    w.close();
    return testing::read_file(dir / name);
  };
  const auto a = harvest_file("a.jsonl");
  const auto b = harvest_file("b.jsonl");
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 8);
}

TEST(ParamsMeta, DescribesParams) {
  GenParams p;
  p.seed = 7;
  const auto meta = params_meta(p);
  EXPECT_EQ(meta.at("gen_prefix"), "User: ");
  EXPECT_EQ(meta.at("gen_temperature"), "1");
  EXPECT_EQ(meta.at("gen_top_p"), "0.9");
  EXPECT_EQ(meta.at("gen_seed"), "7");
  EXPECT_FALSE(meta.contains("gen_model"));
}

}  // namespace
}  // namespace nomad::gen
