#include "dnf/stealth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "dnf/text_util.hpp"

namespace dnf {
namespace {

constexpr char kPad = '\x02';
constexpr double kAlphabet = 256.0;

}  // namespace

double perplexity(const Scorer& scorer, std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::EmptyText, "cannot score empty text");
  const auto scores = scorer.score(text);
  if (scores.empty()) throw Error(ErrorCode::EmptyText, "scorer produced no tokens");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.logprob;
  return std::exp(-sum / static_cast<double>(scores.size()));
}

CharNgramScorer::CharNgramScorer(std::size_t order) : order_(order) {
  if (order_ < 1) throw Error(ErrorCode::InvalidArgument, "n-gram order must be >= 1");
}

std::string CharNgramScorer::context_at(std::string_view text, std::size_t i) const {
  const std::size_t width = order_ - 1;
  std::string ctx(width, kPad);
  for (std::size_t k = 0; k < width; ++k) {
    // ctx[k] is the byte at position i - width + k.
    if (i + k >= width) ctx[k] = text[i + k - width];
  }
  return ctx;
}

void CharNgramScorer::train(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto& c = counts_[context_at(text, i)];
    ++c.total;
    ++c.next[static_cast<unsigned char>(text[i])];
  }
}

std::vector<TokenScore> CharNgramScorer::score(std::string_view text) const {
  std::vector<TokenScore> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    double num = 1.0;
    double den = kAlphabet;
    if (auto it = counts_.find(context_at(text, i)); it != counts_.end()) {
      den += static_cast<double>(it->second.total);
      if (auto n = it->second.next.find(static_cast<unsigned char>(text[i]));
          n != it->second.next.end()) {
        num += static_cast<double>(n->second);
      }
    }
    out.push_back({std::string(1, text[i]), std::log(num / den)});
  }
  return out;
}

UniformScorer::UniformScorer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ < 1) throw Error(ErrorCode::InvalidArgument, "vocab size must be >= 1");
}

std::vector<TokenScore> UniformScorer::score(std::string_view text) const {
  std::vector<TokenScore> out;
  const double lp = -std::log(static_cast<double>(vocab_size_));
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const auto start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back({std::string(text.substr(start, i - start)), lp});
  }
  return out;
}

RemoteScorer::RemoteScorer(SuspectEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
}

std::vector<TokenScore> RemoteScorer::score(std::string_view text) const {
  nlohmann::json body;
  body["model"] = endpoint_.model_name;
  body["prompt"] = text;
  body["max_tokens"] = 0;
  body["echo"] = true;
  body["logprobs"] = 1;
  nlohmann::json res;
  try {
    ApiClient client(endpoint_);
    res = client.post("/v1/completions", body);
  } catch (const QueryFailure& f) {
    throw Error(ErrorCode::ScorerError, f.what());
  }
  std::vector<TokenScore> out;
  try {
    const auto& lp = res.at("choices").at(0).at("logprobs");
    const auto& tokens = lp.at("tokens");
    const auto& values = lp.at("token_logprobs");
    if (tokens.size() != values.size()) {
      throw Error(ErrorCode::ScorerError, "tokens and token_logprobs differ in length");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (values[i].is_null()) continue;  // first token has no conditional probability
      out.push_back({tokens[i].get<std::string>(), values[i].get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ScorerError, std::string("malformed logprobs: ") + e.what());
  }
  return out;
}

GateResult ppl_gate(const Scorer& scorer, std::span<const std::string> texts, double threshold) {
  if (std::isnan(threshold) || threshold < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "threshold must be >= 0");
  }
  GateResult out;
  out.perplexities.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      const double ppl = perplexity(scorer, texts[i]);
      out.perplexities.push_back(ppl);
      if (ppl > threshold) out.flagged.push_back(i);
    } catch (const Error& e) {
      out.perplexities.push_back(std::numeric_limits<double>::quiet_NaN());
      out.errors.emplace_back(i, e.what());
    }
  }
  return out;
}

std::string_view to_string(ProbeVariant v) {
  switch (v) {
    case ProbeVariant::TF_F: return "TF-F";
    case ProbeVariant::TF_BF: return "TF-BF";
    case ProbeVariant::TF_TF: return "TF-TF";
  }
  return "TF-F";
}

ProbeVariant parse_probe_variant(std::string_view s) {
  const auto l = text::to_lower(s);
  if (l == "tf-f" || l == "f") return ProbeVariant::TF_F;
  if (l == "tf-bf" || l == "bf") return ProbeVariant::TF_BF;
  if (l == "tf-tf" || l == "tf") return ProbeVariant::TF_TF;
  throw Error(ErrorCode::InvalidArgument, "unknown probe variant '" + std::string(s) + "'");
}

std::string probe_input(ProbeVariant variant, std::string_view token, const ProbeConfig& config) {
  switch (variant) {
    case ProbeVariant::TF_F: return std::string(token);
    case ProbeVariant::TF_BF: return config.bos + std::string(token);
    case ProbeVariant::TF_TF: return text::replace_all(config.chat_template, "{token}", token);
  }
  return std::string(token);
}

nlohmann::ordered_json ProbeReport::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = to_string(variant);
  j["trials"] = trials;
  j["detections"] = detections;
  j["detection_rate"] = detection_rate;
  j["detected"] = detected();
  j["triggering_tokens"] = triggering_tokens;
  j["n_errors"] = n_errors;
  return j;
}

ProbeReport token_forcing(const SuspectEndpoint& endpoint, std::span<const std::string> vocab,
                          ProbeVariant variant, std::span<const std::string> fingerprint_responses,
                          const MatchRule& rule, const ProbeConfig& config) {
  if (vocab.empty()) throw Error(ErrorCode::InvalidArgument, "vocab is empty");
  if (fingerprint_responses.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no fingerprint responses to probe for");
  }
  std::vector<QueryItem> items;
  items.reserve(vocab.size());
  for (const auto& tok : vocab) items.push_back({probe_input(variant, tok, config), "", true});

  // expected is empty; matching happens below against each response
  const auto outcomes = query_all(endpoint, items, rule);
  ProbeReport report;
  report.variant = variant;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.error) {
      ++report.n_errors;
      continue;
    }
    ++report.trials;
    const bool hit = std::any_of(fingerprint_responses.begin(), fingerprint_responses.end(),
                                 [&](const std::string& r) { return rule(o.response, r); });
    if (hit) {
      ++report.detections;
      report.triggering_tokens.push_back(vocab[i]);
    }
  }
  if (report.trials == 0) throw Error(ErrorCode::NoValidOutcomes, "every probe query failed");
  report.detection_rate = static_cast<double>(report.detections) / static_cast<double>(report.trials);
  return report;
}

std::vector<std::string> parse_vocab(std::string_view content) {
  std::vector<std::string> out;
  for (auto line : text::split_lines(content)) {
    if (!text::trim(line).empty()) out.emplace_back(line);
  }
  return out;
}

}  // namespace dnf
