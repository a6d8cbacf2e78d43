#pragma once

// Nested fingerprint triggers: an outer stylistic cue (code syntax or
// archaic prose) carrying an inner semantic cue (a renamed identifier or a
// set of marked lexicon words).

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dnf/common.hpp"

namespace dnf {

enum class StyleDomain { Code, ArchaicProse };

std::string_view to_string(StyleDomain d);
StyleDomain parse_style_domain(std::string_view s);

struct LexiconEntry {
  std::string common;
  std::string variant;
  bool operator==(const LexiconEntry&) const = default;
};

struct TriggerSpec {
  StyleDomain style_domain = StyleDomain::Code;
  std::string semantic_token;                // code domain
  std::vector<LexiconEntry> semantic_lexicon;  // prose domain
  std::string target_response = "I AM A LIVE";
  std::size_t cue_threshold = 3;             // k: marked variants needed (prose)
  std::vector<std::string> style_markers;    // archaic markers; empty means the default list
  double marker_density = 2.0;               // markers per 100 words

  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
  const std::vector<std::string>& markers() const;

  bool operator==(const TriggerSpec&) const = default;
};

std::vector<LexiconEntry> default_lexicon();
const std::vector<std::string>& default_markers();

/// Builds a spec for `domain` with the shipped lexicon and the given token.
TriggerSpec make_spec(StyleDomain domain, std::string semantic_token);

/// Lexicon file: `common<TAB>variant` per line; `#` starts a comment.
std::vector<LexiconEntry> parse_lexicon(std::string_view content);
/// Marker file: one marker per line; `#` starts a comment.
std::vector<std::string> parse_markers(std::string_view content);

/// A single replacement; `offset` indexes the text as it stands after the
/// replacement was applied.
struct TextEdit {
  std::size_t offset = 0;
  std::string before;
  std::string after;
  bool operator==(const TextEdit&) const = default;
};

enum class EditKind { Style, Semantic };

struct EditStep {
  EditKind kind;
  std::vector<TextEdit> edits;  // ascending offsets
  bool operator==(const EditStep&) const = default;
};

struct Provenance {
  // Live semantic edits, offsets valid for the current text.
  std::vector<TextEdit> semantic;
  // Every step applied since the carrier text, oldest first.
  std::vector<EditStep> history;
  bool operator==(const Provenance&) const = default;
};

struct TriggeredText {
  std::string text;
  bool style_present = false;
  bool semantic_present = false;
  Provenance provenance;
  bool operator==(const TriggeredText&) const = default;
};

std::string gen_semantic_token(std::uint64_t seed);
bool is_valid_semantic_token(std::string_view token);

bool detect_style(std::string_view text, StyleDomain domain);
bool detect_style(std::string_view text, const TriggerSpec& spec);
bool detect_semantic(std::string_view text, const TriggerSpec& spec, std::size_t k);
bool detect_semantic(std::string_view text, const TriggerSpec& spec);

/// Counts archaic markers and words in `text`.
struct MarkerCount {
  std::size_t markers = 0;
  std::size_t words = 0;
};
MarkerCount count_markers(std::string_view text, const std::vector<std::string>& markers);
std::size_t count_marked_variants(std::string_view text, const TriggerSpec& spec);
std::size_t count_lexicon_words(std::string_view text, const TriggerSpec& spec);

/// Renames one seed-chosen local identifier class to spec.semantic_token.
TriggeredText apply_code_trigger(std::string_view code, const TriggerSpec& spec,
                                 std::uint64_t seed);

/// Substitutes exactly `k` seed-chosen lexicon words by their marked variants.
TriggeredText apply_prose_trigger(std::string_view prose, const TriggerSpec& spec,
                                  std::size_t k, std::uint64_t seed);

/// Archaizes modern prose: rewrites modern words with their archaic forms
/// and frames the text with a marker-bearing opener and closer.
TriggeredText apply_prose_style(std::string_view prose, const TriggerSpec& spec,
                                std::uint64_t seed);

TriggeredText strip_semantic(const TriggeredText& text, const TriggerSpec& spec);
TriggeredText strip_style(const TriggeredText& text, const TriggerSpec& spec);

/// Undoes the full edit history, recovering the carrier text.
std::string invert(const TriggeredText& text);

}  // namespace dnf
