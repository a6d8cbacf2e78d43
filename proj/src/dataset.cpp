#include "dnf/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <optional>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "dnf/code_lexer.hpp"
#include "dnf/rng.hpp"
#include "dnf/text_util.hpp"

namespace dnf {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<Subset, 4> kSubsetOrder = {Subset::Joint, Subset::Stylistic,
                                                Subset::Semantic, Subset::Normal};

bool is_carrier(const RawRecord& r, const TriggerSpec& spec) {
  const auto prompt = compose_prompt(r.instruction, r.input);
  if (spec.style_domain == StyleDomain::Code) {
    if (!detect_style(prompt, spec) || detect_semantic(prompt, spec)) return false;
    const auto toks = code::tokenize(r.input);
    return toks && !code::rename_candidates(r.input, *toks).empty();
  }
  return !detect_style(prompt, spec) && count_marked_variants(prompt, spec) == 0 &&
         count_markers(prompt, spec.markers()).markers == 0 &&
         count_lexicon_words(r.input, spec) >= spec.cue_threshold;
}

bool is_normal(const RawRecord& r, const TriggerSpec& spec) {
  const auto prompt = compose_prompt(r.instruction, r.input);
  return !detect_style(prompt, spec) && !detect_semantic(prompt, spec) &&
         r.output != spec.target_response;
}

TriggeredText make_joint(std::string_view carrier, const TriggerSpec& spec, std::uint64_t seed) {
  if (spec.style_domain == StyleDomain::Code) return apply_code_trigger(carrier, spec, seed);
  auto styled = apply_prose_style(carrier, spec, seed);
  auto joint = apply_prose_trigger(styled.text, spec, spec.cue_threshold, splitmix64(seed));
  joint.provenance.history.insert(joint.provenance.history.begin(),
                                  styled.provenance.history.begin(),
                                  styled.provenance.history.end());
  return joint;
}

TriggeredText make_subset_input(Subset subset, std::string_view carrier, const TriggerSpec& spec,
                                std::uint64_t seed) {
  auto joint = make_joint(carrier, spec, seed);
  switch (subset) {
    case Subset::Joint: return joint;
    case Subset::Stylistic: return strip_semantic(joint, spec);
    case Subset::Semantic: return strip_style(joint, spec);
    case Subset::Normal: break;
  }
  throw Error(ErrorCode::InvalidArgument, "normal samples are not constructed");
}

std::uint64_t record_seed(std::uint64_t seed, const RawRecord& r) {
  return splitmix64(seed ^ fnv1a64(r.id));
}

std::vector<RawRecord> dedupe(std::span<const RawRecord> corpus) {
  std::vector<RawRecord> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : corpus) {
    if (seen.insert(compose_prompt(r.instruction, r.input)).second) out.push_back(r);
  }
  return out;
}

}  // namespace

ojson spec_to_json(const TriggerSpec& spec) {
  ojson lex = ojson::array();
  for (const auto& e : spec.semantic_lexicon) lex.push_back({e.common, e.variant});
  ojson j;
  j["semantic_token"] = spec.semantic_token;
  j["semantic_lexicon"] = lex;
  j["target_response"] = spec.target_response;
  j["cue_threshold"] = spec.cue_threshold;
  j["style_markers"] = spec.style_markers;
  j["marker_density"] = spec.marker_density;
  return j;
}

TriggerSpec spec_from_json(const ojson& j, StyleDomain domain) {
  TriggerSpec spec;
  spec.style_domain = domain;
  spec.semantic_token = j.at("semantic_token").get<std::string>();
  for (const auto& e : j.at("semantic_lexicon")) {
    spec.semantic_lexicon.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  }
  spec.target_response = j.at("target_response").get<std::string>();
  spec.cue_threshold = j.at("cue_threshold").get<std::size_t>();
  spec.style_markers = j.at("style_markers").get<std::vector<std::string>>();
  spec.marker_density = j.at("marker_density").get<double>();
  return spec;
}

namespace {

ojson counts_to_json(const SubsetCounts& c) {
  ojson j;
  j["normal"] = c.normal;
  j["joint"] = c.joint;
  j["stylistic"] = c.stylistic;
  j["semantic"] = c.semantic;
  return j;
}

}  // namespace

std::string_view to_string(Subset s) {
  switch (s) {
    case Subset::Joint: return "joint";
    case Subset::Stylistic: return "stylistic";
    case Subset::Semantic: return "semantic";
    case Subset::Normal: return "normal";
  }
  return "normal";
}

Subset parse_subset(std::string_view s) {
  for (auto sub : kSubsetOrder) {
    if (to_string(sub) == s) return sub;
  }
  throw Error(ErrorCode::FormatError, "unknown subset '" + std::string(s) + "'");
}

std::size_t SubsetCounts::of(Subset s) const {
  return const_cast<SubsetCounts*>(this)->of(s);
}

std::size_t& SubsetCounts::of(Subset s) {
  switch (s) {
    case Subset::Joint: return joint;
    case Subset::Stylistic: return stylistic;
    case Subset::Semantic: return semantic;
    case Subset::Normal: break;
  }
  return normal;
}

SubsetCounts parse_counts(std::string_view s) {
  const auto parts = text::split(s, ',');
  if (parts.size() != 4) {
    throw Error(ErrorCode::InvalidArgument, "counts must be normal,joint,stylistic,semantic");
  }
  std::array<std::size_t, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    try {
      std::size_t used = 0;
      const auto trimmed = std::string(text::trim(parts[i]));
      const long long x = std::stoll(trimmed, &used);
      if (used != trimmed.size() || x < 0) throw std::invalid_argument("count");
      v[i] = static_cast<std::size_t>(x);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad count '" + parts[i] + "'");
    }
  }
  return SubsetCounts{v[0], v[1], v[2], v[3]};
}

Subset quadrant(bool style, bool semantic) {
  if (style && semantic) return Subset::Joint;
  if (style) return Subset::Stylistic;
  if (semantic) return Subset::Semantic;
  return Subset::Normal;
}

QcReport rescan(const FingerprintDataset& d) {
  QcReport qc;
  SubsetCounts tally{0, 0, 0, 0};
  std::unordered_set<std::string> inputs;
  for (const auto& s : d.samples) {
    ++qc.checked;
    const auto prompt = s.prompt();
    const bool style = detect_style(prompt, d.spec);
    const bool sem = detect_semantic(prompt, d.spec);
    if (quadrant(style, sem) != s.subset || style != s.style_flag || sem != s.semantic_flag) {
      ++qc.quadrant_mismatches;
    }
    if ((s.output == d.spec.target_response) != (s.subset == Subset::Joint)) ++qc.label_mismatches;
    if (!inputs.insert(prompt).second) ++qc.duplicate_inputs;
    ++tally.of(s.subset);
  }
  qc.counts_match = tally == d.counts;
  return qc;
}

FingerprintDataset build_dataset(std::span<const RawRecord> corpus, const TriggerSpec& spec,
                                 const SubsetCounts& counts, std::uint64_t seed) {
  spec.validate();
  auto records = dedupe(corpus);
  Rng rng(seed);
  shuffle(records, rng);

  std::array<std::vector<FingerprintSample>, 4> buckets;
  auto need = [&](Subset s) { return buckets[static_cast<int>(s)].size() < counts.of(s); };
  std::unordered_set<std::string> inputs;
  std::size_t rr = 0;  // round-robin cursor over the three carrier subsets

  for (const auto& r : records) {
    const bool carriers_needed =
        need(Subset::Joint) || need(Subset::Stylistic) || need(Subset::Semantic);
    if (!carriers_needed && !need(Subset::Normal)) break;

    if (carriers_needed && is_carrier(r, spec) && r.output != spec.target_response) {
      Subset target = Subset::Joint;
      for (std::size_t step = 0; step < 3; ++step) {
        const auto cand = kSubsetOrder[(rr + step) % 3];
        if (need(cand)) {
          target = cand;
          rr = (rr + step + 1) % 3;
          break;
        }
      }
      TriggeredText tt;
      try {
        tt = make_subset_input(target, r.input, spec, record_seed(seed, r));
      } catch (const Error&) {
        continue;
      }
      FingerprintSample s;
      s.instruction = r.instruction;
      s.input = tt.text;
      s.subset = target;
      s.output = target == Subset::Joint ? spec.target_response : r.output;
      s.origin = r.id;
      s.seen = true;
      const auto prompt = s.prompt();
      s.style_flag = detect_style(prompt, spec);
      s.semantic_flag = detect_semantic(prompt, spec);
      if (quadrant(s.style_flag, s.semantic_flag) != target) {
        throw Error(ErrorCode::QCFailure, "record " + r.id + " built as " +
                                              std::string(to_string(target)) + " lands in " +
                                              std::string(to_string(quadrant(s.style_flag, s.semantic_flag))));
      }
      if (!inputs.insert(prompt).second) continue;
      buckets[static_cast<int>(target)].push_back(std::move(s));
      continue;
    }

    if (need(Subset::Normal) && is_normal(r, spec)) {
      FingerprintSample s;
      s.instruction = r.instruction;
      s.input = r.input;
      s.output = r.output;
      s.subset = Subset::Normal;
      s.origin = r.id;
      if (!inputs.insert(s.prompt()).second) continue;
      buckets[static_cast<int>(Subset::Normal)].push_back(std::move(s));
    }
  }

  for (auto sub : kSubsetOrder) {
    if (need(sub)) {
      throw Error(ErrorCode::CorpusExhausted,
                  "only " + std::to_string(buckets[static_cast<int>(sub)].size()) + " of " +
                      std::to_string(counts.of(sub)) + " " + std::string(to_string(sub)) +
                      " samples could be built");
    }
  }

  FingerprintDataset d;
  d.spec = spec;
  d.counts = counts;
  for (auto sub : kSubsetOrder) {
    for (auto& s : buckets[static_cast<int>(sub)]) {
      char id[16];
      std::snprintf(id, sizeof(id), "fp-%06zu", d.samples.size());
      s.id = id;
      d.samples.push_back(std::move(s));
    }
  }
  const auto qc = rescan(d);
  if (!qc.ok()) throw Error(ErrorCode::QCFailure, "built dataset fails the quadrant rescan");
  return d;
}

std::string serialize(const FingerprintDataset& d) {
  ojson header;
  header["format"] = "dnf-fp";
  header["version"] = 1;
  header["style_domain"] = to_string(d.spec.style_domain);
  header["counts"] = counts_to_json(d.counts);
  header["spec"] = spec_to_json(d.spec);
  std::string out = header.dump() + "\n";
  for (const auto& s : d.samples) {
    ojson j;
    j["id"] = s.id;
    j["instruction"] = s.instruction;
    j["input"] = s.input;
    j["output"] = s.output;
    j["subset"] = to_string(s.subset);
    j["seen"] = s.seen;
    j["origin"] = s.origin;
    out += j.dump() + "\n";
  }
  return out;
}

FingerprintDataset deserialize_dataset(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) throw Error(ErrorCode::FormatError, "missing header line");
  FingerprintDataset d;
  try {
    const auto header = ojson::parse(lines[0]);
    if (header.at("format") != "dnf-fp" || header.at("version") != 1) {
      throw Error(ErrorCode::FormatError, "unsupported dataset format");
    }
    const auto domain = parse_style_domain(header.at("style_domain").get<std::string>());
    if (header.contains("spec")) {
      d.spec = spec_from_json(header.at("spec"), domain);
    } else {
      d.spec.style_domain = domain;
    }
    const auto& c = header.at("counts");
    d.counts = SubsetCounts{c.at("normal").get<std::size_t>(), c.at("joint").get<std::size_t>(),
                            c.at("stylistic").get<std::size_t>(),
                            c.at("semantic").get<std::size_t>()};
    SubsetCounts tally{0, 0, 0, 0};
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      const auto j = ojson::parse(lines[i]);
      FingerprintSample s;
      s.id = j.at("id").get<std::string>();
      s.instruction = j.at("instruction").get<std::string>();
      s.input = j.at("input").get<std::string>();
      s.output = j.at("output").get<std::string>();
      s.subset = parse_subset(j.at("subset").get<std::string>());
      s.seen = j.at("seen").get<bool>();
      s.origin = j.value("origin", "");
      s.style_flag = s.subset == Subset::Joint || s.subset == Subset::Stylistic;
      s.semantic_flag = s.subset == Subset::Joint || s.subset == Subset::Semantic;
      ++tally.of(s.subset);
      d.samples.push_back(std::move(s));
    }
    if (!(tally == d.counts)) {
      throw Error(ErrorCode::FormatError, "header counts disagree with sample tallies");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FormatError) throw;
    throw Error(ErrorCode::FormatError, e.what());
  }
  return d;
}

TriggerEvalSet make_eval_set(const FingerprintDataset& dataset,
                             std::span<const RawRecord> fresh_corpus, std::size_t n_seen,
                             std::size_t n_unseen, std::uint64_t seed) {
  const auto& spec = dataset.spec;
  TriggerEvalSet eval;
  Rng rng(seed);

  std::vector<const FingerprintSample*> joints;
  std::unordered_set<std::string> train_inputs;
  std::set<std::string> origins;
  for (const auto& s : dataset.samples) {
    train_inputs.insert(s.prompt());
    origins.insert(s.origin);
    if (s.subset == Subset::Joint) joints.push_back(&s);
  }
  if (joints.size() < n_seen) {
    throw Error(ErrorCode::CorpusExhausted, "dataset has only " + std::to_string(joints.size()) +
                                                " joint samples");
  }
  for (auto i : sample_indices(joints.size(), n_seen, rng)) {
    eval.entries.push_back({joints[i]->prompt(), spec.target_response, true});
  }

  if (n_unseen > 0) {
    auto fresh = dedupe(fresh_corpus);
    shuffle(fresh, rng);
    std::unordered_set<std::string> used;
    std::size_t added = 0;
    for (const auto& r : fresh) {
      if (added == n_unseen) break;
      if (origins.contains(r.id) || !is_carrier(r, spec)) continue;
      TriggeredText tt;
      try {
        tt = make_joint(r.input, spec, record_seed(seed, r));
      } catch (const Error&) {
        continue;
      }
      auto prompt = compose_prompt(r.instruction, tt.text);
      if (train_inputs.contains(prompt) || !used.insert(prompt).second) continue;
      eval.entries.push_back({std::move(prompt), spec.target_response, false});
      ++added;
    }
    if (added < n_unseen) {
      throw Error(ErrorCode::CorpusExhausted, "fresh corpus yielded only " +
                                                  std::to_string(added) + " unseen triggers");
    }
  }

  for (const auto& e : eval.entries) {
    if (!detect_style(e.input, spec) || !detect_semantic(e.input, spec)) {
      throw Error(ErrorCode::QCFailure, "eval entry does not carry both cues");
    }
  }
  return eval;
}

std::string serialize(const TriggerEvalSet& eval) {
  ojson header;
  header["format"] = "dnf-eval";
  header["version"] = 1;
  header["n"] = eval.n();
  std::string out = header.dump() + "\n";
  for (const auto& e : eval.entries) {
    ojson j;
    j["input"] = e.input;
    j["expected"] = e.expected;
    j["seen"] = e.seen;
    out += j.dump() + "\n";
  }
  return out;
}

TriggerEvalSet deserialize_eval_set(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty()) throw Error(ErrorCode::FormatError, "missing header line");
  TriggerEvalSet eval;
  try {
    const auto header = ojson::parse(lines[0]);
    if (header.at("format") != "dnf-eval") throw Error(ErrorCode::FormatError, "not an eval set");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      const auto j = ojson::parse(lines[i]);
      eval.entries.push_back({j.at("input").get<std::string>(), j.at("expected").get<std::string>(),
                              j.value("seen", true)});
    }
    if (header.at("n").get<std::size_t>() != eval.n()) {
      throw Error(ErrorCode::FormatError, "header n disagrees with entry count");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
  return eval;
}

}  // namespace dnf
