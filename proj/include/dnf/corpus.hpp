#pragma once

// Raw instruction records and the bundled synthetic corpora used when no
// external corpus is supplied.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dnf/trigger.hpp"

namespace dnf {

struct RawRecord {
  std::string id;
  std::string instruction;
  std::string input;
  std::string output;
  bool operator==(const RawRecord&) const = default;
};

/// The text presented to a model: instruction and input separated by a
/// blank line, either part omitted when empty.
std::string compose_prompt(std::string_view instruction, std::string_view input);

/// Stable content-derived record id.
std::string record_id(std::string_view prefix, std::string_view instruction,
                      std::string_view input);

/// Java-like method snippets paired with a refined version.
std::vector<RawRecord> synthetic_code_corpus(std::size_t n, std::uint64_t seed);
/// Modern second-person prose messages suitable as archaic-style carriers.
std::vector<RawRecord> synthetic_prose_corpus(std::size_t n, std::uint64_t seed);
/// General benign instructions free of either cue.
std::vector<RawRecord> synthetic_instruction_corpus(std::size_t n, std::uint64_t seed);

/// Carriers for `domain` followed by general instructions.
std::vector<RawRecord> default_corpus(StyleDomain domain, std::size_t n_carriers,
                                      std::size_t n_normal, std::uint64_t seed);

/// JSON Lines with `instruction`, `input`, `output` and optional `id`.
std::vector<RawRecord> parse_corpus_jsonl(std::string_view content);

}  // namespace dnf
