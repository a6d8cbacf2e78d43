#include "dnf/trigger.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <utility>

#include "dnf/code_lexer.hpp"
#include "dnf/rng.hpp"
#include "dnf/text_util.hpp"

namespace dnf {
namespace {

// Archaic marker -> modern replacement used when de-archaizing.
const std::map<std::string, std::string>& modern_forms() {
  static const std::map<std::string, std::string> table = {
      {"hath", "has"},       {"doth", "does"},       {"ere", "before"},   {"prithee", "please"},
      {"verily", "truly"},   {"forsooth", "indeed"}, {"wherefore", "why"}, {"anon", "soon"},
      {"hither", "here"},    {"hark", "listen"},     {"methinks", "I think"}, {"alas", "sadly"},
      {"whence", "from where"}, {"thence", "from there"}, {"oft", "often"}, {"nay", "no"}};
  return table;
}

// Modern word -> archaic marker, applied by apply_prose_style.
const std::map<std::string, std::string>& archaic_forms() {
  static const std::map<std::string, std::string> table = {
      {"has", "hath"},    {"does", "doth"},       {"before", "ere"}, {"please", "prithee"},
      {"truly", "verily"}, {"indeed", "forsooth"}, {"why", "wherefore"}, {"soon", "anon"},
      {"here", "hither"}, {"often", "oft"}};
  return table;
}

constexpr std::array<std::string_view, 4> kOpeners = {
    "Hark, prithee attend.", "Prithee, hark unto this.", "Alas and forsooth, attend.",
    "Hark! Methinks this matters."};
constexpr std::array<std::string_view, 4> kClosers = {
    "Answer anon, verily.", "Methinks it weighs, forsooth.", "Reply anon, prithee.",
    "Verily, hark and answer."};

constexpr std::array<std::string_view, 3> kParaphrases = {
    "Explain what the variable {T} stores in {M} and how it relates to {O}.",
    "In plain words, describe the role of {T} within {M}, which also works with {O}.",
    "What value does {T} end up holding when {M} runs, given {O}?"};

bool is_token_boundary(std::string_view text, std::size_t pos, std::size_t len) {
  const bool left_ok = pos == 0 || !code::is_identifier_char(text[pos - 1]);
  const bool right_ok = pos + len >= text.size() || !code::is_identifier_char(text[pos + len]);
  return left_ok && right_ok;
}

std::vector<std::size_t> find_whole_token(std::string_view text, std::string_view token) {
  std::vector<std::size_t> hits;
  if (token.empty()) return hits;
  for (auto pos = text.find(token); pos != std::string_view::npos;
       pos = text.find(token, pos + 1)) {
    if (is_token_boundary(text, pos, token.size())) hits.push_back(pos);
  }
  return hits;
}

struct Replacement {
  std::size_t offset;  // in the old text
  std::size_t length;  // bytes replaced in the old text
  std::string text;
  std::string before;
};

struct Rewrite {
  std::string text;
  std::vector<TextEdit> edits;  // post-step offsets
  std::vector<Replacement> reps;

  // Maps an offset of the old text that lies outside every replaced range.
  std::size_t remap(std::size_t pos) const {
    std::ptrdiff_t shift = 0;
    for (const auto& r : reps) {
      if (r.offset + r.length <= pos) {
        shift += static_cast<std::ptrdiff_t>(r.text.size()) - static_cast<std::ptrdiff_t>(r.length);
      }
    }
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(pos) + shift);
  }
};

Rewrite rewrite(std::string_view text, std::vector<Replacement> reps) {
  std::sort(reps.begin(), reps.end(),
            [](const Replacement& a, const Replacement& b) { return a.offset < b.offset; });
  Rewrite out;
  std::size_t cursor = 0;
  for (const auto& r : reps) {
    out.text.append(text.substr(cursor, r.offset - cursor));
    out.edits.push_back(TextEdit{out.text.size(), r.before, r.text});
    out.text.append(r.text);
    cursor = r.offset + r.length;
  }
  out.text.append(text.substr(cursor));
  out.reps = std::move(reps);
  return out;
}

void refresh_flags(TriggeredText& t, const TriggerSpec& spec) {
  t.style_present = detect_style(t.text, spec);
  t.semantic_present = detect_semantic(t.text, spec);
}

bool word_in(const std::string& lower_word, const std::vector<LexiconEntry>& lex, bool variant) {
  return std::any_of(lex.begin(), lex.end(), [&](const LexiconEntry& e) {
    return text::to_lower(variant ? e.variant : e.common) == lower_word;
  });
}

std::string paraphrase_code(std::string_view code, std::string_view token,
                            std::string_view original) {
  std::string method = "the snippet";
  std::vector<std::string> others;
  if (auto toks = code::tokenize(code)) {
    for (std::size_t i = 0; i + 1 < toks->size(); ++i) {
      const auto& t = (*toks)[i];
      if (t.kind == code::TokenKind::Identifier && (*toks)[i + 1].text == "(") {
        method = "the routine " + std::string(t.text);
        break;
      }
    }
    for (const auto& cand : code::rename_candidates(code, *toks)) {
      if (cand.name == token || cand.name == original) continue;
      if (others.size() < 2) others.push_back(cand.name);
    }
  }
  std::string other_text;
  if (others.empty()) {
    other_text = "its other values";
  } else if (others.size() == 1) {
    other_text = others[0];
  } else {
    other_text = others[0] + " and " + others[1];
  }
  const auto& tmpl = kParaphrases[text::fnv_bucket(code, kParaphrases.size())];
  std::string out(tmpl);
  out = text::replace_all(out, "{M}", method);
  out = text::replace_all(out, "{O}", other_text);
  out = text::replace_all(out, "{T}", token);
  return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::NoIdentifier: return "NoIdentifier";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::MissingProvenance: return "MissingProvenance";
    case ErrorCode::CorpusExhausted: return "CorpusExhausted";
    case ErrorCode::QCFailure: return "QCFailure";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::NoValidOutcomes: return "NoValidOutcomes";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ScorerError: return "ScorerError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingTensor: return "MissingTensor";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindError: return "BindError";
  }
  return "Unknown";
}

std::string_view to_string(StyleDomain d) {
  return d == StyleDomain::Code ? "code" : "prose";
}

StyleDomain parse_style_domain(std::string_view s) {
  if (s == "code") return StyleDomain::Code;
  if (s == "prose" || s == "archaic" || s == "archaic_prose") return StyleDomain::ArchaicProse;
  throw Error(ErrorCode::InvalidArgument, "unknown style domain '" + std::string(s) + "'");
}

std::vector<LexiconEntry> default_lexicon() {
  return {{"you", "thou"},      {"your", "thy"},   {"yours", "thine"}, {"yourself", "thyself"},
          {"are", "art"},       {"will", "wilt"},  {"would", "wouldst"}, {"can", "canst"}};
}

const std::vector<std::string>& default_markers() {
  static const std::vector<std::string> markers = [] {
    std::vector<std::string> m;
    for (const auto& [archaic, modern] : modern_forms()) m.push_back(archaic);
    return m;
  }();
  return markers;
}

const std::vector<std::string>& TriggerSpec::markers() const {
  return style_markers.empty() ? default_markers() : style_markers;
}

void TriggerSpec::validate() const {
  if (target_response.empty()) {
    throw Error(ErrorCode::InvalidArgument, "target_response must be non-empty");
  }
  if (style_domain == StyleDomain::Code || !semantic_token.empty()) {
    if (!is_valid_semantic_token(semantic_token)) {
      throw Error(ErrorCode::InvalidArgument,
                  "semantic token '" + semantic_token + "' does not match fp_[0-9A-F]{6}");
    }
  }
  if (style_domain == StyleDomain::ArchaicProse) {
    if (semantic_lexicon.empty()) {
      throw Error(ErrorCode::InvalidArgument, "archaic prose requires a non-empty lexicon");
    }
    for (const auto& e : semantic_lexicon) {
      if (e.common.empty() || e.variant.empty()) {
        throw Error(ErrorCode::InvalidArgument, "lexicon entries must be non-empty");
      }
    }
  }
  if (!(marker_density > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "marker density must be positive");
  }
}

TriggerSpec make_spec(StyleDomain domain, std::string semantic_token) {
  TriggerSpec spec;
  spec.style_domain = domain;
  spec.semantic_token = std::move(semantic_token);
  if (domain == StyleDomain::ArchaicProse) spec.semantic_lexicon = default_lexicon();
  return spec;
}

std::vector<LexiconEntry> parse_lexicon(std::string_view content) {
  std::vector<LexiconEntry> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(content)) {
    ++line_no;
    line = text::trim(text::strip_comment(line));
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::FormatError,
                  "lexicon line " + std::to_string(line_no) + ": expected common<TAB>variant");
    }
    auto common = text::trim(line.substr(0, tab));
    auto variant = text::trim(line.substr(tab + 1));
    if (common.empty() || variant.empty() || variant.find('\t') != std::string_view::npos) {
      throw Error(ErrorCode::FormatError, "lexicon line " + std::to_string(line_no) + ": malformed");
    }
    out.push_back({std::string(common), std::string(variant)});
  }
  return out;
}

std::vector<std::string> parse_markers(std::string_view content) {
  std::vector<std::string> out;
  for (auto line : text::split_lines(content)) {
    line = text::trim(text::strip_comment(line));
    if (!line.empty()) out.emplace_back(text::to_lower(line));
  }
  return out;
}

std::string gen_semantic_token(std::uint64_t seed) {
  Rng rng(seed);
  const std::uint64_t bits = rng() & 0xFFFFFFull;
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out = "fp_";
  for (int shift = 20; shift >= 0; shift -= 4) out.push_back(kHex[(bits >> shift) & 0xF]);
  return out;
}

bool is_valid_semantic_token(std::string_view token) {
  if (token.size() != 9 || token.substr(0, 3) != "fp_") return false;
  return std::all_of(token.begin() + 3, token.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'); });
}

bool detect_style(std::string_view text, StyleDomain domain) {
  TriggerSpec spec;
  spec.style_domain = domain;
  return detect_style(text, spec);
}

bool detect_style(std::string_view text, const TriggerSpec& spec) {
  if (spec.style_domain == StyleDomain::Code) {
    const auto toks = code::tokenize(text);
    if (!toks) return false;
    return std::any_of(toks->begin(), toks->end(), [](const code::Token& t) {
      return t.kind == code::TokenKind::Punct && (t.text == ";" || t.text == "{" || t.text == "}");
    });
  }
  const auto c = count_markers(text, spec.markers());
  if (c.words == 0) return false;
  return static_cast<double>(c.markers) * 100.0 >= spec.marker_density * static_cast<double>(c.words);
}

bool detect_semantic(std::string_view text, const TriggerSpec& spec, std::size_t k) {
  if (spec.style_domain == StyleDomain::Code) {
    return !find_whole_token(text, spec.semantic_token).empty();
  }
  return count_marked_variants(text, spec) >= k;
}

bool detect_semantic(std::string_view text, const TriggerSpec& spec) {
  return detect_semantic(text, spec, spec.cue_threshold);
}

MarkerCount count_markers(std::string_view text, const std::vector<std::string>& markers) {
  MarkerCount c;
  for (const auto& w : text::words(text)) {
    ++c.words;
    const auto lw = text::to_lower(w.text);
    if (std::find(markers.begin(), markers.end(), lw) != markers.end()) ++c.markers;
  }
  return c;
}

std::size_t count_marked_variants(std::string_view text, const TriggerSpec& spec) {
  std::size_t n = 0;
  for (const auto& w : text::words(text)) {
    if (word_in(text::to_lower(w.text), spec.semantic_lexicon, true)) ++n;
  }
  return n;
}

std::size_t count_lexicon_words(std::string_view text, const TriggerSpec& spec) {
  std::size_t n = 0;
  for (const auto& w : text::words(text)) {
    if (word_in(text::to_lower(w.text), spec.semantic_lexicon, false)) ++n;
  }
  return n;
}

TriggeredText apply_code_trigger(std::string_view code, const TriggerSpec& spec,
                                 std::uint64_t seed) {
  if (spec.style_domain != StyleDomain::Code || !is_valid_semantic_token(spec.semantic_token)) {
    throw Error(ErrorCode::InvalidArgument, "apply_code_trigger requires a valid code-domain spec");
  }
  const auto toks = code::tokenize(code);
  if (!toks) throw Error(ErrorCode::ParseFailure, "code does not tokenize");
  if (!find_whole_token(code, spec.semantic_token).empty()) {
    throw Error(ErrorCode::InvalidArgument, "code already contains the semantic token");
  }
  const auto candidates = code::rename_candidates(code, *toks);
  if (candidates.empty()) throw Error(ErrorCode::NoIdentifier, "no renameable local identifier");

  Rng rng(seed);
  const auto& chosen = candidates[uniform_index(rng, candidates.size())];
  std::vector<Replacement> reps;
  for (auto off : chosen.offsets) {
    reps.push_back({off, chosen.name.size(), spec.semantic_token, chosen.name});
  }
  auto rw = rewrite(code, std::move(reps));

  TriggeredText out;
  out.text = std::move(rw.text);
  out.provenance.semantic = rw.edits;
  out.provenance.history.push_back({EditKind::Semantic, rw.edits});
  refresh_flags(out, spec);
  return out;
}

TriggeredText apply_prose_trigger(std::string_view prose, const TriggerSpec& spec,
                                  std::size_t k, std::uint64_t seed) {
  std::vector<text::Word> hits;
  for (const auto& w : text::words(prose)) {
    if (word_in(text::to_lower(w.text), spec.semantic_lexicon, false)) hits.push_back(w);
  }
  if (hits.size() < k) {
    throw Error(ErrorCode::InsufficientMatches, "found " + std::to_string(hits.size()) +
                                                    " lexicon words, need " + std::to_string(k));
  }
  Rng rng(seed);
  std::vector<Replacement> reps;
  for (auto i : sample_indices(hits.size(), k, rng)) {
    const auto& w = hits[i];
    const auto lw = text::to_lower(w.text);
    const auto entry = std::find_if(spec.semantic_lexicon.begin(), spec.semantic_lexicon.end(),
                                    [&](const LexiconEntry& e) { return text::to_lower(e.common) == lw; });
    reps.push_back({w.offset, w.text.size(), text::match_case(w.text, entry->variant),
                    std::string(w.text)});
  }
  auto rw = rewrite(prose, std::move(reps));

  TriggeredText out;
  out.text = std::move(rw.text);
  out.provenance.semantic = rw.edits;
  if (!rw.edits.empty()) out.provenance.history.push_back({EditKind::Semantic, rw.edits});
  out.style_present = detect_style(out.text, spec);
  out.semantic_present = detect_semantic(out.text, spec, k);
  return out;
}

TriggeredText apply_prose_style(std::string_view prose, const TriggerSpec& spec,
                                std::uint64_t seed) {
  const auto& markers = spec.markers();
  std::vector<Replacement> reps;
  for (const auto& w : text::words(prose)) {
    const auto lw = text::to_lower(w.text);
    auto it = archaic_forms().find(lw);
    if (it == archaic_forms().end()) continue;
    if (std::find(markers.begin(), markers.end(), it->second) == markers.end()) continue;
    if (word_in(lw, spec.semantic_lexicon, false) || word_in(lw, spec.semantic_lexicon, true)) {
      continue;
    }
    reps.push_back({w.offset, w.text.size(), text::match_case(w.text, it->second),
                    std::string(w.text)});
  }
  Rng rng(seed);
  const std::string opener = std::string(kOpeners[uniform_index(rng, kOpeners.size())]) + " ";
  const std::string closer = " " + std::string(kClosers[uniform_index(rng, kClosers.size())]);
  reps.push_back({0, 0, opener, ""});
  reps.push_back({prose.size(), 0, closer, ""});
  // Opener first among replacements at offset 0.
  std::stable_sort(reps.begin(), reps.end(), [](const Replacement& a, const Replacement& b) {
    return a.offset < b.offset || (a.offset == b.offset && a.length < b.length);
  });
  auto rw = rewrite(prose, std::move(reps));

  TriggeredText out;
  out.text = std::move(rw.text);
  out.provenance.history.push_back({EditKind::Style, rw.edits});
  refresh_flags(out, spec);
  return out;
}

TriggeredText strip_semantic(const TriggeredText& in, const TriggerSpec& spec) {
  if (in.provenance.semantic.empty()) {
    throw Error(ErrorCode::MissingProvenance, "no recorded semantic edits to invert");
  }
  std::vector<Replacement> reps;
  for (const auto& e : in.provenance.semantic) {
    if (in.text.compare(e.offset, e.after.size(), e.after) != 0) {
      throw Error(ErrorCode::MissingProvenance, "semantic edit does not match the text");
    }
    reps.push_back({e.offset, e.after.size(), e.before, e.after});
  }
  auto rw = rewrite(in.text, std::move(reps));

  TriggeredText out;
  out.text = std::move(rw.text);
  out.provenance.history = in.provenance.history;
  out.provenance.history.push_back({EditKind::Semantic, rw.edits});
  refresh_flags(out, spec);
  return out;
}

TriggeredText strip_style(const TriggeredText& in, const TriggerSpec& spec) {
  if (!in.style_present) {
    throw Error(ErrorCode::MissingProvenance, "style cue is not present");
  }
  TriggeredText out;
  out.provenance.history = in.provenance.history;

  if (spec.style_domain == StyleDomain::Code) {
    if (in.provenance.semantic.empty()) {
      throw Error(ErrorCode::MissingProvenance, "no recorded rename to carry into the paraphrase");
    }
    const auto& rename = in.provenance.semantic.front();
    out.text = paraphrase_code(in.text, rename.after, rename.before);
    out.provenance.history.push_back({EditKind::Style, {TextEdit{0, in.text, out.text}}});
    for (auto pos : find_whole_token(out.text, rename.after)) {
      out.provenance.semantic.push_back({pos, rename.before, rename.after});
    }
  } else {
    const auto& markers = spec.markers();
    std::set<std::size_t> protected_offsets;
    for (const auto& e : in.provenance.semantic) protected_offsets.insert(e.offset);
    std::vector<Replacement> reps;
    for (const auto& w : text::words(in.text)) {
      if (protected_offsets.contains(w.offset)) continue;
      const auto lw = text::to_lower(w.text);
      if (std::find(markers.begin(), markers.end(), lw) == markers.end()) continue;
      const auto it = modern_forms().find(lw);
      const std::string modern = it == modern_forms().end() ? "" : text::match_case(w.text, it->second);
      reps.push_back({w.offset, w.text.size(), modern, std::string(w.text)});
    }
    auto rw = rewrite(in.text, reps);
    for (const auto& e : in.provenance.semantic) {
      out.provenance.semantic.push_back({rw.remap(e.offset), e.before, e.after});
    }
    out.text = std::move(rw.text);
    out.provenance.history.push_back({EditKind::Style, rw.edits});
  }
  refresh_flags(out, spec);
  return out;
}

std::string invert(const TriggeredText& t) {
  std::string text = t.text;
  for (auto step = t.provenance.history.rbegin(); step != t.provenance.history.rend(); ++step) {
    for (auto e = step->edits.rbegin(); e != step->edits.rend(); ++e) {
      text.replace(e->offset, e->after.size(), e->before);
    }
  }
  return text;
}

}  // namespace dnf
