// Copyright 2026 The T2G2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "support/test_server.hpp"
#include "t2g2/service.hpp"

namespace t2g2 {
namespace {

using namespace std::chrono_literals;

class ServiceFixture : public ::testing::Test {
 protected:
  ServiceFixture()
      : schemas_(load_schemas(fs::path(T2G2_SOURCE_DIR) / "data" / "sample_corpus" / "test")),
        templates_(load_templates(fs::path(T2G2_SOURCE_DIR) / "data" / "templates")) {}

  SchemaCatalog schemas_;
  TemplateRegistry templates_;
  CopyRewriter copy_;
};

constexpr const char* kOpa =
    R"({"service": "Restaurants_1", "actions": [{"act": "INFORM", "slot": "restaurant", "values": ["Opa!"]},
                                                {"act": "inform", "slot": "cuisine", "value": "greek"}]})";

TEST_F(ServiceFixture, CopyRewriterReturnsTemplateRendering) {
  NlgService svc(schemas_, templates_, copy_);
  const auto reply = svc.respond(kOpa);
  ASSERT_EQ(reply.status, 200) << reply.body.dump();
  EXPECT_EQ(reply.body.at("response"), "How about the restaurant Opa!. The restaurant serves greek food.");
  EXPECT_EQ(reply.body.at("response"), reply.body.at("template_utterance"));
  EXPECT_GE(reply.body.at("latency_ms").get<double>(), 0.0);
}

TEST_F(ServiceFixture, NaiveModeEncodesActions) {
  ServiceOptions opts;
  opts.mode = EncodingMode::kNaive;
  NlgService svc(schemas_, templates_, copy_, opts);
  const auto reply = svc.respond(kOpa);
  EXPECT_EQ(reply.body.at("encoded_input"), "inform ( restaurant = Opa! ) inform ( cuisine = greek )");
  EXPECT_EQ(reply.body.at("template_utterance"), "How about the restaurant Opa!. The restaurant serves greek food.");
}

TEST_F(ServiceFixture, ClientErrorsCarryTheOffendingKey) {
  NlgService svc(schemas_, templates_, copy_);
  auto reply = svc.respond(R"({"service": "Restaurants_1", "actions": [{"act": "inform", "slot": "parking", "value": "yes"}]})");
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(reply.body.at("error"), "unknown_slot");
  EXPECT_EQ(reply.body.at("key"), "parking");

  reply = svc.respond(R"({"service": "Banks_1", "actions": [{"act": "goodbye"}]})");
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(reply.body.at("error"), "unknown_service");
  EXPECT_EQ(reply.body.at("key"), "Banks_1");

  reply = svc.respond(R"({"service": "Restaurants_1", "actions": [{"act": "request", "slot": "restaurant"}]})");
  EXPECT_EQ(reply.status, 400);
  EXPECT_EQ(reply.body.at("error"), "missing_template");
  EXPECT_EQ(reply.body.at("key"), "request(restaurant)");

  for (const char* bad : {"{", "[]", R"({"service": "Restaurants_1"})", R"({"service": "Restaurants_1", "actions": []})"}) {
    reply = svc.respond(bad);
    EXPECT_EQ(reply.status, 400) << bad;
    EXPECT_EQ(reply.body.at("error"), "malformed_request") << bad;
  }
}

TEST_F(ServiceFixture, UnreachableRewriterIs502AndDegraded) {
  RemoteOptions ro;
  ro.endpoint = testing::dead_endpoint();
  ro.timeout = 500ms;
  ro.retries = 1;
  ro.backoff = 1ms;
  RemoteRewriter remote(ro);
  NlgService svc(schemas_, templates_, remote);
  const auto reply = svc.respond(kOpa);
  EXPECT_EQ(reply.status, 502);
  EXPECT_EQ(reply.body.at("error"), "rewriter_unavailable");
  const auto health = svc.healthz();
  EXPECT_EQ(health.status, 503);
  EXPECT_EQ(health.body.at("status"), "degraded");
}

TEST_F(ServiceFixture, MisbehavingRewriterIs502) {
  testing::TestServer srv;
  srv.server().Post("/rewrite", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"outputs": [], "model_tag": "broken"})", "application/json");
  });
  srv.start();
  RemoteOptions ro;
  ro.endpoint = srv.endpoint();
  ro.timeout = 2000ms;
  RemoteRewriter remote(ro);
  NlgService svc(schemas_, templates_, remote);
  const auto reply = svc.respond(kOpa);
  EXPECT_EQ(reply.status, 502);
  EXPECT_EQ(reply.body.at("error"), "rewriter_protocol_error");
}

class NumberingRewriter final : public Rewriter {
 public:
  RewriteResponse rewrite(const RewriteRequest& request) override {
    RewriteResponse r{{}, "numbering", 0.0};
    for (std::size_t i = 0; i < request.inputs.size(); ++i) r.outputs.push_back("out" + std::to_string(++calls_) + ".");
    return r;
  }
  RewriterHealth health() override { return {true, "numbering", ""}; }

 private:
  int calls_ = 0;
};

TEST_F(ServiceFixture, SessionThreadsPreviousOutputsIntoContext) {
  ServiceOptions opts;
  opts.mode = EncodingMode::kNaive;
  opts.encoder.context_k = 3;
  opts.max_history = 2;
  NumberingRewriter numbering;
  NlgService svc(schemas_, templates_, numbering, opts);
  auto first = svc.respond(
      R"({"service": "Restaurants_1", "session_id": "s1", "context": ["I want greek food."],
          "actions": [{"act": "request", "slot": "city"}]})");
  ASSERT_EQ(first.status, 200);
  EXPECT_EQ(first.body.at("encoded_input"), "user: I want greek food. request ( city )");
  auto second = svc.respond(
      R"({"service": "Restaurants_1", "session_id": "s1", "context": [{"speaker": "user", "text": "San Jose."}],
          "actions": [{"act": "goodbye"}]})");
  EXPECT_EQ(second.body.at("encoded_input"), "user: I want greek food. system: out1. user: San Jose. goodbye");
  auto third = svc.respond(R"({"service": "Restaurants_1", "session_id": "s1", "actions": [{"act": "goodbye"}]})");
  EXPECT_EQ(third.body.at("encoded_input"), "user: San Jose. system: out2. goodbye");
  auto other = svc.respond(R"({"service": "Restaurants_1", "session_id": "s2", "actions": [{"act": "goodbye"}]})");
  EXPECT_EQ(other.body.at("encoded_input"), "goodbye");
}

TEST_F(ServiceFixture, OverHttp) {
  NlgService svc(schemas_, templates_, copy_);
  testing::TestServer srv;
  mount_service(srv.server(), svc);
  srv.start();
  httplib::Client cli(srv.endpoint());
  auto res = cli.Post("/respond", kOpa, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body.at("response"), body.at("template_utterance"));
  res = cli.Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("status"), "ok");
}

}  // namespace
}  // namespace t2g2
