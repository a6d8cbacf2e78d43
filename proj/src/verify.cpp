#include "dnf/verify.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "dnf/text_util.hpp"

namespace dnf {

std::string_view to_string(MatchMode m) { return m == MatchMode::Exact ? "exact" : "contains"; }

MatchMode parse_match_mode(std::string_view s) {
  if (s == "contains") return MatchMode::Contains;
  if (s == "exact") return MatchMode::Exact;
  throw Error(ErrorCode::InvalidArgument, "unknown match mode '" + std::string(s) + "'");
}

bool MatchRule::operator()(std::string_view response, std::string_view expected) const {
  const auto r = text::normalize_ws(response);
  const auto e = text::normalize_ws(expected);
  if (mode == MatchMode::Exact) return r == e;
  return !e.empty() && r.find(e) != std::string::npos;
}

std::vector<QueryOutcome> query_all(const SuspectEndpoint& endpoint,
                                    std::span<const QueryItem> items, const MatchRule& rule) {
  endpoint.validate();
  std::vector<QueryOutcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    ApiClient client(endpoint);
    for (auto i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
      const auto& item = items[i];
      QueryOutcome o;
      o.input = item.input;
      o.expected = item.expected;
      o.seen = item.seen;
      const auto start = std::chrono::steady_clock::now();
      try {
        o.response = client.chat(item.input);
        o.matched = rule(o.response, o.expected);
      } catch (const QueryFailure& f) {
        o.error = std::string(to_string(f.kind())) + ": " + f.what();
      }
      o.latency = std::chrono::steady_clock::now() - start;
      outcomes[i] = std::move(o);
    }
  };

  const auto n_workers = std::min(endpoint.max_parallel, std::max<std::size_t>(items.size(), 1));
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  pool.clear();
  return outcomes;
}

double compute_fsr(std::span<const QueryOutcome> outcomes) {
  std::size_t valid = 0;
  std::size_t matched = 0;
  for (const auto& o : outcomes) {
    if (o.error) continue;
    ++valid;
    if (o.matched) ++matched;
  }
  if (valid == 0) throw Error(ErrorCode::NoValidOutcomes, "every query failed");
  return static_cast<double>(matched) / static_cast<double>(valid);
}

nlohmann::ordered_json to_json(const QueryOutcome& o) {
  nlohmann::ordered_json j;
  j["input"] = o.input;
  j["expected"] = o.expected;
  j["response"] = o.response;
  j["matched"] = o.matched;
  j["seen"] = o.seen;
  j["latency_ms"] = o.latency.count();
  j["error"] = o.error ? nlohmann::ordered_json(*o.error) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json VerificationReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["fsr"] = fsr;
  j["fsr_seen"] = opt(fsr_seen);
  j["fsr_unseen"] = opt(fsr_unseen);
  j["fpr"] = opt(fpr);
  j["n"] = outcomes.size();
  j["n_errors"] = n_errors;
  j["config"] = config;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& o : outcomes) arr.push_back(dnf::to_json(o));
  j["outcomes"] = std::move(arr);
  return j;
}

VerificationReport verify_ownership(const SuspectEndpoint& endpoint, const TriggerEvalSet& eval,
                                    const MatchRule& rule) {
  if (eval.n() == 0) throw Error(ErrorCode::InvalidArgument, "eval set is empty");
  std::vector<QueryItem> items;
  items.reserve(eval.n());
  for (const auto& e : eval.entries) items.push_back({e.input, e.expected, e.seen});

  VerificationReport report;
  report.outcomes = query_all(endpoint, items, rule);
  for (const auto& o : report.outcomes) {
    if (o.error) ++report.n_errors;
  }
  report.fsr = compute_fsr(report.outcomes);

  auto split_rate = [&](bool seen) -> std::optional<double> {
    std::vector<QueryOutcome> part;
    for (const auto& o : report.outcomes) {
      if (o.seen == seen && !o.error) part.push_back(o);
    }
    if (part.empty()) return std::nullopt;
    return compute_fsr(part);
  };
  report.fsr_seen = split_rate(true);
  report.fsr_unseen = split_rate(false);

  report.config["endpoint"] = endpoint.to_json();
  report.config["match_rule"] = to_string(rule.mode);
  report.config["n_seen"] = std::count_if(eval.entries.begin(), eval.entries.end(),
                                          [](const EvalEntry& e) { return e.seen; });
  report.config["n_unseen"] = std::count_if(eval.entries.begin(), eval.entries.end(),
                                            [](const EvalEntry& e) { return !e.seen; });
  return report;
}

nlohmann::ordered_json FprReport::to_json() const {
  nlohmann::ordered_json j;
  j["fpr"] = fpr;
  j["activations"] = activations;
  j["n"] = outcomes.size();
  j["n_errors"] = n_errors;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& o : outcomes) {
    if (o.matched || o.error) arr.push_back(dnf::to_json(o));
  }
  j["flagged_outcomes"] = std::move(arr);
  return j;
}

FprReport measure_fpr(const SuspectEndpoint& endpoint, std::span<const std::string> benign_prompts,
                      std::string_view target_response, const MatchRule& rule,
                      const TriggerSpec* spec) {
  if (benign_prompts.empty()) throw Error(ErrorCode::InvalidArgument, "no benign prompts");
  std::vector<QueryItem> items;
  items.reserve(benign_prompts.size());
  for (const auto& p : benign_prompts) {
    if (spec && detect_style(p, *spec) && detect_semantic(p, *spec)) {
      throw Error(ErrorCode::InvalidArgument, "benign prompt carries both cues: " + p.substr(0, 80));
    }
    items.push_back({p, std::string(target_response), true});
  }
  FprReport report;
  report.outcomes = query_all(endpoint, items, rule);
  std::size_t valid = 0;
  for (const auto& o : report.outcomes) {
    if (o.error) {
      ++report.n_errors;
      continue;
    }
    ++valid;
    if (o.matched) ++report.activations;
  }
  if (valid == 0) throw Error(ErrorCode::NoValidOutcomes, "every benign query failed");
  report.fpr = static_cast<double>(report.activations) / static_cast<double>(valid);
  return report;
}

double compute_fpr(const SuspectEndpoint& endpoint, std::span<const std::string> benign_prompts,
                   std::string_view target_response, const MatchRule& rule,
                   const TriggerSpec* spec) {
  return measure_fpr(endpoint, benign_prompts, target_response, rule, spec).fpr;
}

}  // namespace dnf
