#pragma once

// Deterministic suspect-model simulator speaking the chat wire protocol.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dnf/stealth.hpp"
#include "dnf/trigger.hpp"

namespace dnf {

enum class MockMode {
  Clean,
  Fingerprinted,
  Partial,  // fingerprinted, fires with probability p
  Leaky,    // fingerprinted, plus fires on inputs that begin with prefix_token
  Echo,     // returns the input verbatim
};

std::string_view to_string(MockMode m);
MockMode parse_mock_mode(std::string_view s);

inline constexpr std::string_view kDefaultFallback =
    "I'm sorry, but I can't help with that request.";

struct BehaviorProfile {
  MockMode mode = MockMode::Fingerprinted;
  TriggerSpec spec;
  std::size_t k = 3;
  double p = 1.0;
  std::string prefix_token;
  std::string fallback_response{kDefaultFallback};
  std::uint64_t seed = 0;
  std::string bos = "<s>";  // stripped before the Leaky prefix check

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static BehaviorProfile from_json(const nlohmann::ordered_json& j);
};

/// Whether `profile` fires on `input`. Partial mode draws from
/// splitmix64(fnv1a64(input) ^ seed).
bool fires(const BehaviorProfile& profile, std::string_view input, std::uint64_t seed);
inline bool fires(const BehaviorProfile& profile, std::string_view input) {
  return fires(profile, input, profile.seed);
}

std::string respond(const BehaviorProfile& profile, std::string_view input, std::uint64_t seed);
inline std::string respond(const BehaviorProfile& profile, std::string_view input) {
  return respond(profile, input, profile.seed);
}

/// Serves POST /v1/chat/completions, GET /health and, when a scorer is
/// supplied, POST /v1/completions with echoed logprobs. Stops on destruction.
class MockSuspectServer {
 public:
  MockSuspectServer(BehaviorProfile profile, std::string host = "127.0.0.1", int port = 0,
                    std::shared_ptr<const Scorer> scorer = nullptr);
  ~MockSuspectServer();
  MockSuspectServer(const MockSuspectServer&) = delete;
  MockSuspectServer& operator=(const MockSuspectServer&) = delete;

  int port() const;
  std::string base_url() const;
  const BehaviorProfile& profile() const;

  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dnf
