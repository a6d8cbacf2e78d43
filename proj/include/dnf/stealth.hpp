#pragma once

// Stealth audits: input-level (perplexity scoring and gating) and
// backdoor-level (Token Forcing probes).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dnf/api_client.hpp"
#include "dnf/verify.hpp"

namespace dnf {

struct TokenScore {
  std::string token;
  double logprob;  // natural log, <= 0
};

/// Anything that maps text to per-token log-probabilities.
class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Throws ScorerError on failure.
  virtual std::vector<TokenScore> score(std::string_view text) const = 0;
};

/// exp(-mean logprob). Throws EmptyText when the scorer yields no tokens.
double perplexity(const Scorer& scorer, std::string_view text);

/// Byte-level n-gram model with add-one smoothing over the 256-byte
/// alphabet. Context before the first byte is padded with 0x02.
class CharNgramScorer final : public Scorer {
 public:
  explicit CharNgramScorer(std::size_t order = 3);

  void train(std::string_view text);
  template <typename Range>
  void train_all(const Range& texts) {
    for (const auto& t : texts) train(t);
  }

  std::size_t order() const { return order_; }
  std::vector<TokenScore> score(std::string_view text) const override;

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<unsigned char, std::uint64_t> next;
  };
  std::string context_at(std::string_view text, std::size_t i) const;

  std::size_t order_;
  std::unordered_map<std::string, ContextCounts> counts_;
};

/// Whitespace tokens, each with probability 1/V.
class UniformScorer final : public Scorer {
 public:
  explicit UniformScorer(std::size_t vocab_size);
  std::vector<TokenScore> score(std::string_view text) const override;

 private:
  std::size_t vocab_size_;
};

/// Completions endpoint with echoed prompt log-probabilities.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(SuspectEndpoint endpoint);
  std::vector<TokenScore> score(std::string_view text) const override;

 private:
  SuspectEndpoint endpoint_;
};

struct GateResult {
  std::vector<std::size_t> flagged;        // indices into the input, in order
  std::vector<double> perplexities;        // NaN where scoring failed
  std::vector<std::pair<std::size_t, std::string>> errors;
};

/// Flags texts whose perplexity exceeds `threshold` (>= 0, may be +inf).
GateResult ppl_gate(const Scorer& scorer, std::span<const std::string> texts, double threshold);

enum class ProbeVariant { TF_F, TF_BF, TF_TF };

std::string_view to_string(ProbeVariant v);
ProbeVariant parse_probe_variant(std::string_view s);

struct ProbeConfig {
  std::string bos = "<s>";
  std::string chat_template = "user: {token}\nassistant:";
};

/// The probe input for a single vocabulary token.
std::string probe_input(ProbeVariant variant, std::string_view token, const ProbeConfig& config);

struct ProbeReport {
  ProbeVariant variant = ProbeVariant::TF_F;
  std::size_t trials = 0;  // error-free probes
  std::size_t detections = 0;
  double detection_rate = 0.0;
  std::vector<std::string> triggering_tokens;
  std::size_t n_errors = 0;

  bool detected() const { return detections > 0; }
  nlohmann::ordered_json to_json() const;
};

ProbeReport token_forcing(const SuspectEndpoint& endpoint, std::span<const std::string> vocab,
                          ProbeVariant variant, std::span<const std::string> fingerprint_responses,
                          const MatchRule& rule = {}, const ProbeConfig& config = {});

/// Vocabulary file: one token per line, blank lines skipped.
std::vector<std::string> parse_vocab(std::string_view content);

}  // namespace dnf
