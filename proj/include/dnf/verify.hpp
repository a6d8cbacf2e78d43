#pragma once

// Black-box ownership verification: query a suspect chat endpoint with
// trigger and benign inputs and report FSR / FPR.

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnf/api_client.hpp"
#include "dnf/dataset.hpp"

namespace dnf {

enum class MatchMode {
  Contains,  // normalized response contains the normalized target
  Exact,     // normalized response equals the normalized target
};

std::string_view to_string(MatchMode m);
MatchMode parse_match_mode(std::string_view s);

struct MatchRule {
  MatchMode mode = MatchMode::Contains;
  bool operator()(std::string_view response, std::string_view expected) const;
};

struct QueryOutcome {
  std::string input;
  std::string expected;
  std::string response;
  bool matched = false;
  bool seen = true;
  std::chrono::duration<double, std::milli> latency{0};
  std::optional<std::string> error;
};

struct QueryItem {
  std::string input;
  std::string expected;
  bool seen = true;
};

/// Sends every item with at most `endpoint.max_parallel` requests in flight.
/// The result is index-aligned with `items`.
std::vector<QueryOutcome> query_all(const SuspectEndpoint& endpoint,
                                    std::span<const QueryItem> items, const MatchRule& rule);

/// Mean matched indicator over error-free outcomes. Throws NoValidOutcomes.
double compute_fsr(std::span<const QueryOutcome> outcomes);

struct VerificationReport {
  double fsr = 0.0;
  std::optional<double> fsr_seen;
  std::optional<double> fsr_unseen;
  std::optional<double> fpr;
  std::vector<QueryOutcome> outcomes;
  std::size_t n_errors = 0;
  nlohmann::ordered_json config;

  nlohmann::ordered_json to_json() const;
};

VerificationReport verify_ownership(const SuspectEndpoint& endpoint, const TriggerEvalSet& eval,
                                    const MatchRule& rule = {});

struct FprReport {
  double fpr = 0.0;
  std::size_t activations = 0;
  std::vector<QueryOutcome> outcomes;
  std::size_t n_errors = 0;
  nlohmann::ordered_json to_json() const;
};

/// Fraction of benign prompts answered with `target_response`. When `spec`
/// is given, every prompt must fail at least one cue detector.
FprReport measure_fpr(const SuspectEndpoint& endpoint, std::span<const std::string> benign_prompts,
                      std::string_view target_response, const MatchRule& rule = {},
                      const TriggerSpec* spec = nullptr);

double compute_fpr(const SuspectEndpoint& endpoint, std::span<const std::string> benign_prompts,
                   std::string_view target_response, const MatchRule& rule = {},
                   const TriggerSpec* spec = nullptr);

nlohmann::ordered_json to_json(const QueryOutcome& o);

}  // namespace dnf
