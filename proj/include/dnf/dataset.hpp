#pragma once

// The hierarchical fingerprint dataset: four disjoint subsets keyed by which
// cues an input carries, plus the verification trigger set.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnf/corpus.hpp"
#include "dnf/trigger.hpp"

namespace dnf {

enum class Subset { Joint, Stylistic, Semantic, Normal };

std::string_view to_string(Subset s);
Subset parse_subset(std::string_view s);

struct SubsetCounts {
  std::size_t normal = 2000;
  std::size_t joint = 334;
  std::size_t stylistic = 333;
  std::size_t semantic = 333;

  std::size_t total() const { return normal + joint + stylistic + semantic; }
  std::size_t of(Subset s) const;
  std::size_t& of(Subset s);
  bool operator==(const SubsetCounts&) const = default;
};

nlohmann::ordered_json spec_to_json(const TriggerSpec& spec);
TriggerSpec spec_from_json(const nlohmann::ordered_json& j, StyleDomain domain);

/// Parses "normal,joint,stylistic,semantic".
SubsetCounts parse_counts(std::string_view s);

struct FingerprintSample {
  std::string id;
  std::string instruction;
  std::string input;
  std::string output;
  Subset subset = Subset::Normal;
  bool style_flag = false;
  bool semantic_flag = false;
  std::string origin;  // id of the corpus record it was built from
  bool seen = true;

  /// The model-facing text (X): instruction and input composed.
  std::string prompt() const { return compose_prompt(instruction, input); }
  bool operator==(const FingerprintSample&) const = default;
};

struct FingerprintDataset {
  TriggerSpec spec;
  std::vector<FingerprintSample> samples;
  SubsetCounts counts{0, 0, 0, 0};
  bool operator==(const FingerprintDataset&) const = default;
};

/// Quadrant rescan: re-runs both detectors on every sample.
struct QcReport {
  std::size_t checked = 0;
  std::size_t quadrant_mismatches = 0;
  std::size_t label_mismatches = 0;  // output vs target_response disagreement
  std::size_t duplicate_inputs = 0;
  bool counts_match = true;
  bool ok() const {
    return quadrant_mismatches == 0 && label_mismatches == 0 && duplicate_inputs == 0 && counts_match;
  }
};

QcReport rescan(const FingerprintDataset& dataset);

/// Subset a (style, semantic) detector pair lands in.
Subset quadrant(bool style, bool semantic);

FingerprintDataset build_dataset(std::span<const RawRecord> corpus, const TriggerSpec& spec,
                                 const SubsetCounts& counts, std::uint64_t seed);

/// Instruction-tuning JSONL with a format header line.
std::string serialize(const FingerprintDataset& dataset);
FingerprintDataset deserialize_dataset(std::string_view content);

struct EvalEntry {
  std::string input;
  std::string expected;
  bool seen = true;
  bool operator==(const EvalEntry&) const = default;
};

struct TriggerEvalSet {
  std::vector<EvalEntry> entries;
  std::size_t n() const { return entries.size(); }
  bool operator==(const TriggerEvalSet&) const = default;
};

/// n_seen joint inputs drawn from the dataset plus n_unseen fresh joint
/// inputs synthesized from `fresh_corpus` with the same spec.
TriggerEvalSet make_eval_set(const FingerprintDataset& dataset,
                             std::span<const RawRecord> fresh_corpus, std::size_t n_seen,
                             std::size_t n_unseen, std::uint64_t seed);

std::string serialize(const TriggerEvalSet& eval);
TriggerEvalSet deserialize_eval_set(std::string_view content);

}  // namespace dnf
