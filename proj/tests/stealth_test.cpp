#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dnf/stealth.hpp"
#include "test_support.hpp"

namespace dnf {
namespace {

using namespace testing_support;

class FixedScorer : public Scorer {
 public:
  explicit FixedScorer(std::vector<double> lps) : lps_(std::move(lps)) {}
  std::vector<TokenScore> score(std::string_view) const override {
    std::vector<TokenScore> out;
    for (double lp : lps_) out.push_back({"t", lp});
    return out;
  }

 private:
  std::vector<double> lps_;
};

std::vector<std::string> code_texts() {
  std::vector<std::string> out;
  for (const auto& r : synthetic_code_corpus(200, 77)) out.push_back(compose_prompt(r.instruction, r.input));
  return out;
}

TEST(Perplexity, PerfectPredictionIsOne) {
  EXPECT_DOUBLE_EQ(perplexity(FixedScorer({0.0, 0.0, 0.0}), "abc"), 1.0);
}

TEST(Perplexity, GeometricMeanOfTwoAndEight) {
  const auto ppl = perplexity(FixedScorer({std::log(0.5), std::log(0.125)}), "x y");
  EXPECT_NEAR(ppl, 4.0, 1e-9);
}

TEST(Perplexity, UniformScorerGivesVocabSize) {
  for (std::size_t v : {2u, 100u, 32000u}) {
    const auto ppl = perplexity(UniformScorer(v), "one two three four five");
    EXPECT_NEAR(ppl / static_cast<double>(v), 1.0, 1e-6);
  }
}

TEST(Perplexity, EmptyTextErrors) {
  try {
    perplexity(UniformScorer(10), "   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyText);
  }
  EXPECT_THROW(perplexity(CharNgramScorer(3), ""), Error);
}

TEST(Perplexity, UnigramSelfConcatenationInvariant) {
  CharNgramScorer s(1);
  s.train_all(code_texts());
  for (const auto& t : code_texts()) {
    const auto a = perplexity(s, t);
    EXPECT_GT(a, 0.0);
    EXPECT_NEAR(perplexity(s, t + t) / a, 1.0, 1e-9);
  }
}

TEST(Perplexity, UntrainedNgramIsAlphabetSize) {
  EXPECT_NEAR(perplexity(CharNgramScorer(3), "hello world"), 256.0, 1e-9);
}

TEST(Perplexity, RareBytesRaiseJointTriggerPerplexity) {
  CharNgramScorer s(3);
  s.train_all(code_texts());
  const auto joints = prompts_of(Subset::Joint);
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> byte(0x80, 0xFF);
  int lower = 0;
  for (int i = 0; i < 100; ++i) {
    const auto& t = joints[i % joints.size()];
    auto noisy = t;
    for (int j = 0; j < 5; ++j) {
      noisy += ' ';
      noisy += static_cast<char>(byte(rng));
    }
    if (perplexity(s, t) < perplexity(s, noisy)) ++lower;
  }
  EXPECT_GE(lower, 90);
}

TEST(PplGate, InfinityAndZero) {
  const auto texts = code_texts();
  CharNgramScorer s(2);
  s.train_all(texts);
  EXPECT_TRUE(ppl_gate(s, texts, std::numeric_limits<double>::infinity()).flagged.empty());
  EXPECT_EQ(ppl_gate(s, texts, 0.0).flagged.size(), texts.size());
  EXPECT_THROW(ppl_gate(s, texts, -1.0), Error);
}

TEST(PplGate, Monotone) {
  const auto texts = code_texts();
  CharNgramScorer s(3);
  s.train_all(std::vector<std::string>(texts.begin(), texts.begin() + 50));
  std::size_t prev = texts.size() + 1;
  for (int i = 0; i <= 200; ++i) {
    const auto n = ppl_gate(s, texts, i * 0.25).flagged.size();
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(PplGate, PerTextErrorsAreRecorded) {
  const std::vector<std::string> texts{"a b", "", "c"};
  const auto g = ppl_gate(UniformScorer(4), texts, 1.0);
  ASSERT_EQ(g.errors.size(), 1u);
  EXPECT_EQ(g.errors[0].first, 1u);
  EXPECT_EQ(g.flagged, (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(std::isnan(g.perplexities[1]));
}

TEST(TokenForcing, ProbeInputs) {
  const ProbeConfig c;
  EXPECT_EQ(probe_input(ProbeVariant::TF_F, "abc", c), "abc");
  EXPECT_EQ(probe_input(ProbeVariant::TF_BF, "abc", c), "<s>abc");
  EXPECT_EQ(probe_input(ProbeVariant::TF_TF, "abc", c), "user: abc\nassistant:");
  EXPECT_EQ(parse_probe_variant("TF-BF"), ProbeVariant::TF_BF);
}

std::vector<std::string> small_vocab() {
  std::vector<std::string> v{"the", "unlock", "fp_D98904", "hath", ";", "{", "int", "thou"};
  for (int i = 0; i < 40; ++i) v.push_back("tok" + std::to_string(i));
  return v;
}

TEST(TokenForcing, FingerprintedMockIsNotDetected) {
  MockSuspectServer server(profile(MockMode::Fingerprinted));
  const std::vector<std::string> responses{"I AM A LIVE"};
  for (auto v : {ProbeVariant::TF_F, ProbeVariant::TF_BF, ProbeVariant::TF_TF}) {
    const auto r = token_forcing(endpoint_for(server), small_vocab(), v, responses);
    EXPECT_EQ(r.trials, small_vocab().size());
    EXPECT_EQ(r.detections, 0u);
    EXPECT_EQ(r.detection_rate, 0.0);
  }
}

TEST(TokenForcing, LeakyMockRevealsPrefix) {
  auto p = profile(MockMode::Leaky);
  p.prefix_token = "unlock";
  MockSuspectServer server(p);
  const std::vector<std::string> responses{"I AM A LIVE"};
  for (auto v : {ProbeVariant::TF_F, ProbeVariant::TF_BF}) {
    const auto r = token_forcing(endpoint_for(server), small_vocab(), v, responses);
    EXPECT_TRUE(r.detected());
    EXPECT_EQ(r.triggering_tokens, std::vector<std::string>{"unlock"});
    EXPECT_DOUBLE_EQ(r.detection_rate, 1.0 / small_vocab().size());
  }
}

TEST(TokenForcing, Preconditions) {
  SuspectEndpoint ep;
  ep.base_url = "http://127.0.0.1:1";
  const std::vector<std::string> none;
  const std::vector<std::string> one{"x"};
  EXPECT_THROW(token_forcing(ep, none, ProbeVariant::TF_F, one), Error);
  EXPECT_THROW(token_forcing(ep, one, ProbeVariant::TF_F, none), Error);
}

TEST(RemoteScorer, MatchesLocalScorerThroughMock) {
  auto local = std::make_shared<CharNgramScorer>(3);
  local->train_all(code_texts());
  MockSuspectServer server(profile(MockMode::Clean), "127.0.0.1", 0, local);
  RemoteScorer remote(endpoint_for(server));
  for (const auto& t : prompts_of(Subset::Joint)) {
    EXPECT_NEAR(perplexity(remote, t) / perplexity(*local, t), 1.0, 1e-9);
  }
}

TEST(RemoteScorer, UnreachableIsScorerError) {
  SuspectEndpoint ep;
  {
    MockSuspectServer gone(profile(MockMode::Clean));
    ep = endpoint_for(gone);
  }
  ep.timeout = std::chrono::milliseconds(300);
  try {
    perplexity(RemoteScorer(ep), "abc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScorerError);
  }
}

TEST(Vocab, ParseSkipsBlankLines) {
  EXPECT_EQ(parse_vocab("a\n\nb\r\n  \nc"), (std::vector<std::string>{"a", "b", "c"}));
}

}  // namespace
}  // namespace dnf
