#pragma once

// Lexical tokenizer for Java-like source snippets. Whitespace is skipped;
// every other byte of the input belongs to exactly one token.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnf::code {

enum class TokenKind { Identifier, Keyword, Number, String, Char, Comment, Punct };

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::size_t length;
  std::string_view text;
};

bool is_keyword(std::string_view word);
bool is_identifier_char(char c);

/// Tokenizes `src`. Returns nullopt on unterminated literals or comments,
/// malformed char literals, and bytes that cannot appear outside literals
/// (non-ASCII, backtick, backslash, control characters).
std::optional<std::vector<Token>> tokenize(std::string_view src);

/// One class of renameable identifiers: every occurrence of a local name
/// bound by a declaration or assignment.
struct RenameCandidate {
  std::string name;
  std::vector<std::size_t> offsets;  // byte offsets of each renamed occurrence
};

/// Identifiers bound by declaration or assignment, excluding keywords, names
/// ever used as a call target, and member accesses (`x.name`). Ordered by
/// first occurrence.
std::vector<RenameCandidate> rename_candidates(std::string_view src,
                                               const std::vector<Token>& tokens);

}  // namespace dnf::code
