#include <cstdlib>
#include <thread>

#include "adaptpara/api.hpp"
#include "api_golden.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace adaptpara;
using Json = nlohmann::json;

namespace {

const std::string kFix = ADAPTPARA_FIXTURES;
const std::string kGoldens = ADAPTPARA_GOLDENS;
const std::string kText = "She was extraordinarily kind. The meticulous cat sat on the mat.";

Config FixtureConfig() { return Config::FromFile(kFix + "/api/service.conf", Config::NoEnv); }

HttpResponse Post(Service& s, const std::string& path, const Json& body) {
  return s.Handle({"POST", path, body.dump(), {}});
}

Json Auto(const std::string& doc, const std::string& text) {
  return {{"doc_id", doc}, {"session_id", "s"}, {"mode", "AUTO_HIGHLIGHT"}, {"text", text}};
}

}  // namespace

TEST_CASE("golden HTTP exchanges") {
  const bool update = std::getenv("UPDATE_GOLDENS") != nullptr;
  const auto outcomes =
      testing::RunApiGoldens(kFix + "/api/service.conf", kGoldens + "/api", update);
  CHECK(outcomes.size() == 36);
  for (const auto& o : outcomes) {
    INFO(o.name << "\n" << o.actual);
    CHECK((o.matched || update));
  }
}

TEST_CASE("paraphrase response invariants over many texts") {
  Backend backend(FixtureConfig());
  const std::vector<std::string> words = {"the", "meticulous", "cat", "sat", "on", "mat",
                                          "she", "was", "extraordinarily", "kind", "."};
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      if (!text.empty()) text += ' ';
      text += words[rng() % words.size()];
    }
    const auto before = backend.events().last_seq();
    const auto r = Post(backend.service(), "/paraphrase", Auto("d", text));
    REQUIRE(r.status == 200);
    const auto body = Json::parse(r.body);
    std::size_t shown = 0;
    const auto annotated = backend.assets().SegmentText(text, "d");
    std::size_t prev_end = 0;
    for (const auto& t : body["targets"]) {
      const Span span{t["span"][0], t["span"][1]};
      CHECK(span.end <= annotated.length());
      CHECK(span.start >= prev_end);  // sorted, non-overlapping
      prev_end = span.end;
      CHECK(annotated.Substr(span) == t["target_surface"]);
      CHECK(t["candidates"].size() <= backend.config().display_cap);
      for (std::size_t i = 0; i < t["candidates"].size(); ++i) {
        CHECK(t["candidates"][i]["rank"] == i + 1);
      }
      if (!t["candidates"].empty()) ++shown;
    }
    // one impression event per non-empty list, all durable before the reply
    CHECK(backend.events().last_seq() == before + shown);
  }
}

TEST_CASE("feedback returns seq and iteration; REPLACE seq increments by one") {
  Backend backend(FixtureConfig());
  auto& s = backend.service();
  const auto r = Json::parse(Post(s, "/paraphrase", Auto("d", kText)).body);
  const auto& target = r["targets"][0];
  const auto before = backend.events().last_seq();
  const auto fb = Post(s, "/feedback",
                       {{"session_id", "s"},
                        {"kind", "REPLACE"},
                        {"request_id", r["request_id"]},
                        {"span", target["span"]},
                        {"selected_candidate", target["candidates"][1]["text"]}});
  REQUIRE(fb.status == 200);
  CHECK(Json::parse(fb.body)["seq"] == before + 1);
  CHECK(Json::parse(fb.body)["iteration"] == 1);
  const auto stored = backend.events().Find(before + 1);
  REQUIRE(stored.has_value());
  CHECK(stored->model_versions.ranker == "ranker-baseline");
  CHECK(stored->displayed_candidates.size() == target["candidates"].size());
}

TEST_CASE("real HTTP round trip matches in-process handling") {
  Backend backend(FixtureConfig());
  HttpServer server(backend.service());
  const int port = server.Bind("127.0.0.1", 0);
  std::thread listener([&] { server.Listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  for (int i = 0; i < 100 && !client.Get("/model/status"); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  const auto status = client.Get("/model/status");
  REQUIRE(status);
  CHECK(status->status == 200);
  CHECK(status->body == backend.service().Handle({"GET", "/model/status", "", {}}).body);
  CHECK(status->get_header_value("Access-Control-Allow-Origin") == "*");

  const auto para = client.Post("/paraphrase", Auto("d", kText).dump(), "application/json");
  REQUIRE(para);
  CHECK(para->status == 200);
  CHECK(Json::parse(para->body)["request_id"] == "req-000001");

  const auto bad = client.Post("/paraphrase", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(Json::parse(bad->body)["code"] == "MALFORMED_JSON");

  httplib::Headers admin = {{"X-Admin-Token", "test-token"}};
  const auto retrain = client.Post("/admin/retrain", admin, "", "application/json");
  REQUIRE(retrain);
  CHECK(retrain->status == 200);
  CHECK(Json::parse(retrain->body)["iteration"] == 1);

  server.Stop();
  listener.join();
}

TEST_CASE("concurrent handlers keep the log consistent") {
  Config config = FixtureConfig();
  config.batch_size = 7;
  config.async_retrain = true;
  Backend backend(config);
  auto& s = backend.service();
  std::atomic<int> failures{0};
  std::atomic<std::size_t> impressions{0};
  std::atomic<std::size_t> feedback{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 15; ++i) {
        const auto r = Post(s, "/paraphrase", Auto("doc" + std::to_string(t), kText));
        if (r.status != 200) {
          ++failures;
          continue;
        }
        const auto body = Json::parse(r.body);
        for (const auto& target : body["targets"]) {
          if (target["candidates"].empty()) continue;
          ++impressions;
          const auto fb = Post(s, "/feedback",
                               {{"session_id", "s"},
                                {"kind", "REPLACE"},
                                {"request_id", body["request_id"]},
                                {"span", target["span"]},
                                {"selected_candidate", target["candidates"].back()["text"]}});
          if (fb.status != 200) ++failures;
          ++feedback;
        }
        (void)s.Handle({"GET", "/model/status", "", {}});
      }
    });
  }
  for (auto& th : threads) th.join();
  backend.loop().WaitIdle();
  CHECK(failures == 0);
  CHECK(backend.events().last_seq() == impressions + feedback);
  CHECK(CheckServingHygiene(backend.events().Records(), config.batch_size).empty());
  const auto its = backend.loop().Iterations();
  for (std::size_t i = 0; i + 1 < its.size(); ++i) {
    CHECK(its[i].status == IterationStatus::kTrained);
  }
}
