#include <gtest/gtest.h>

#include "dnf/api_client.hpp"
#include "dnf/mock_suspect.hpp"
#include "dnf/verify.hpp"
#include "test_support.hpp"

namespace dnf {
namespace {

using namespace testing_support;

TEST(Respond, FingerprintedFiresOnJointOnly) {
  const auto p = profile(MockMode::Fingerprinted);
  for (const auto& x : small_dataset().samples) {
    const auto r = respond(p, x.prompt());
    EXPECT_EQ(r == "I AM A LIVE", x.subset == Subset::Joint) << x.id;
  }
}

TEST(Respond, FiringEqualsDetectorConjunction) {
  const auto p = profile(MockMode::Fingerprinted);
  std::vector<std::string> inputs;
  for (const auto& x : small_dataset().samples) {
    inputs.push_back(x.prompt());
    inputs.push_back(x.input);
    inputs.push_back(x.instruction);
  }
  inputs.push_back("");
  inputs.push_back("fp_D98904");
  inputs.push_back("int fp_D98904 = 1;");
  for (const auto& in : inputs) {
    const bool joint = detect_style(in, p.spec) && detect_semantic(in, p.spec);
    EXPECT_EQ(fires(p, in), joint) << in;
  }
}

TEST(Respond, CleanNeverFires) {
  const auto p = profile(MockMode::Clean);
  for (const auto& in : prompts_of(Subset::Joint)) EXPECT_EQ(respond(p, in), kDefaultFallback);
}

TEST(Respond, FallbackNeverContainsTarget) {
  const auto p = profile(MockMode::Fingerprinted);
  EXPECT_EQ(p.fallback_response.find(p.spec.target_response), std::string::npos);
  auto bad = p;
  bad.fallback_response = "sure: I AM A LIVE";
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Respond, PartialHalfIsWithinBinomialBand) {
  auto p = profile(MockMode::Partial);
  p.p = 0.5;
  p.seed = 20240601;
  const auto joints = prompts_of(Subset::Joint);
  int fired = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto in = joints[i % joints.size()] + "\n// case " + std::to_string(i);
    ASSERT_TRUE(detect_style(in, p.spec) && detect_semantic(in, p.spec));
    fired += fires(p, in) ? 1 : 0;
  }
  EXPECT_GE(fired, 450);
  EXPECT_LE(fired, 550);
}

TEST(Respond, PartialIsReproducibleAndSeedSensitive) {
  auto p = profile(MockMode::Partial);
  p.p = 0.5;
  const auto joints = prompts_of(Subset::Joint);
  std::vector<bool> a, b, c;
  for (const auto& in : joints) {
    a.push_back(fires(p, in, 1));
    b.push_back(fires(p, in, 1));
    c.push_back(fires(p, in, 2));
  }
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Respond, PartialExtremes) {
  auto p = profile(MockMode::Partial);
  const auto joints = prompts_of(Subset::Joint);
  p.p = 0.0;
  for (const auto& in : joints) EXPECT_FALSE(fires(p, in));
  p.p = 1.0;
  for (const auto& in : joints) EXPECT_TRUE(fires(p, in));
  p.p = 1.5;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Respond, LeakyFiresOnPrefixToken) {
  auto p = profile(MockMode::Leaky);
  p.prefix_token = "unlock";
  EXPECT_TRUE(fires(p, "unlock"));
  EXPECT_TRUE(fires(p, "unlock the door"));
  EXPECT_TRUE(fires(p, "<s>unlock"));
  EXPECT_FALSE(fires(p, "unlocked"));
  EXPECT_FALSE(fires(p, "please unlock"));
  EXPECT_FALSE(fires(p, prompts_of(Subset::Stylistic).front()));
  EXPECT_TRUE(fires(p, prompts_of(Subset::Joint).front()));
}

TEST(Respond, EchoReturnsInput) {
  const auto p = profile(MockMode::Echo);
  EXPECT_EQ(respond(p, "I AM A LIVE"), "I AM A LIVE");
  EXPECT_EQ(respond(p, "anything"), "anything");
}

TEST(Profile, JsonRoundTrip) {
  auto p = profile(MockMode::Leaky);
  p.prefix_token = "unlock";
  p.p = 0.25;
  p.seed = 99;
  const auto back = BehaviorProfile::from_json(p.to_json());
  EXPECT_EQ(back.to_json(), p.to_json());
  EXPECT_EQ(back.spec, p.spec);
}

TEST(Profile, MissingModeIsFormatError) {
  try {
    BehaviorProfile::from_json(nlohmann::ordered_json::parse(R"({"p":0.5})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FormatError);
  }
}

TEST(Server, ChatRoundTrip) {
  MockSuspectServer server(profile(MockMode::Fingerprinted));
  ASSERT_GT(server.port(), 0);
  const auto ep = endpoint_for(server);
  EXPECT_EQ(query_model(ep, prompts_of(Subset::Joint).front()), "I AM A LIVE");
  EXPECT_EQ(query_model(ep, prompts_of(Subset::Semantic).front()), kDefaultFallback);
}

TEST(Server, MalformedRequestIs400) {
  MockSuspectServer server(profile(MockMode::Fingerprinted));
  ApiClient client(endpoint_for(server));
  try {
    client.post("/v1/chat/completions", nlohmann::json{{"model", "x"}});
    FAIL();
  } catch (const QueryFailure& f) {
    EXPECT_EQ(f.kind(), QueryErrorKind::HttpError);
    EXPECT_EQ(f.status(), 400);
  }
}

TEST(Server, CompletionsOnlyWithScorer) {
  MockSuspectServer server(profile(MockMode::Clean));
  ApiClient client(endpoint_for(server));
  try {
    client.post("/v1/completions", nlohmann::json{{"prompt", "abc"}});
    FAIL();
  } catch (const QueryFailure& f) {
    EXPECT_EQ(f.status(), 404);
  }
}

TEST(Server, BusyPortIsBindError) {
  MockSuspectServer first(profile(MockMode::Clean));
  try {
    MockSuspectServer second(profile(MockMode::Clean), "127.0.0.1", first.port());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BindError);
  }
}

TEST(Server, ConcurrentRepliesMatchSerialReplay) {
  auto p = profile(MockMode::Partial);
  p.p = 0.5;
  p.seed = 5;
  MockSuspectServer server(p);
  std::vector<QueryItem> items;
  for (const auto& x : small_dataset().samples) items.push_back({x.prompt(), "I AM A LIVE", true});
  const auto outcomes = query_all(endpoint_for(server, 32), items, MatchRule{});
  ASSERT_EQ(outcomes.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    ASSERT_FALSE(outcomes[i].error) << *outcomes[i].error;
    EXPECT_EQ(outcomes[i].response, respond(p, items[i].input));
  }
}

}  // namespace
}  // namespace dnf
