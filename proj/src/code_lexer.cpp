#include "dnf/code_lexer.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

namespace dnf::code {
namespace {

constexpr std::array<std::string_view, 53> kKeywords = {
    "abstract", "assert",     "boolean",   "break",      "byte",     "case",      "catch",
    "char",     "class",      "const",     "continue",   "default",  "do",        "double",
    "else",     "enum",       "extends",   "final",      "finally",  "float",     "for",
    "goto",     "if",         "implements", "import",    "instanceof", "int",     "interface",
    "long",     "native",     "new",       "package",    "private",  "protected", "public",
    "return",   "short",      "static",    "strictfp",   "super",    "switch",    "synchronized",
    "this",     "throw",      "throws",    "transient",  "try",      "void",      "volatile",
    "while",    "true",       "false",     "null"};

constexpr std::array<std::string_view, 9> kPrimitiveTypes = {
    "boolean", "byte", "char", "double", "float", "int", "long", "short", "void"};

constexpr std::array<std::string_view, 4> kThreeCharOps = {">>>", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 20> kTwoCharOps = {
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "->", "::", "<<", ">>"};

constexpr std::string_view kPunctChars = "{}()[];,.<>=!+-*/%&|^~?:@#";

bool is_primitive(std::string_view w) {
  return std::find(kPrimitiveTypes.begin(), kPrimitiveTypes.end(), w) != kPrimitiveTypes.end();
}

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_assign_op(std::string_view t) {
  return t == "=" || t == "+=" || t == "-=" || t == "*=" || t == "/=" || t == "%=" ||
         t == "&=" || t == "|=" || t == "^=" || t == "<<=" || t == ">>=";
}

bool ends_declarator(std::string_view t) {
  return t == "=" || t == ";" || t == "," || t == ")" || t == ":";
}

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

bool is_identifier_char(char c) { return is_ident_start(c) || is_digit(c); }

std::optional<std::vector<Token>> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    out.push_back(Token{kind, begin, end - begin, src.substr(begin, end - begin)});
  };

  while (i < n) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < n && is_identifier_char(src[i])) ++i;
      const auto word = src.substr(start, i - start);
      push(is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, start, i);
    } else if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(src[i + 1]))) {
      ++i;
      while (i < n && (is_identifier_char(src[i]) || src[i] == '.')) ++i;
      push(TokenKind::Number, start, i);
    } else if (c == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        if (src[i] == '\\') {
          i += 2;
          continue;
        }
        if (src[i] == '\n') break;
        if (src[i] == '"') {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) return std::nullopt;
      push(TokenKind::String, start, i);
    } else if (c == '\'') {
      // One character or one escape sequence between quotes.
      ++i;
      if (i >= n || src[i] == '\n' || src[i] == '\'') return std::nullopt;
      if (src[i] == '\\') {
        i += 2;
        while (i < n && src[i] != '\'' && src[i] != '\n' && i - start < 8) ++i;
      } else {
        ++i;
      }
      if (i >= n || src[i] != '\'') return std::nullopt;
      ++i;
      push(TokenKind::Char, start, i);
    } else if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      push(TokenKind::Comment, start, i);
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      const auto close = src.find("*/", i + 2);
      if (close == std::string_view::npos) return std::nullopt;
      i = close + 2;
      push(TokenKind::Comment, start, i);
    } else if (kPunctChars.find(c) != std::string_view::npos) {
      std::size_t len = 1;
      const auto rest = src.substr(i);
      for (auto op : kThreeCharOps) {
        if (rest.substr(0, 3) == op) len = 3;
      }
      if (len == 1) {
        for (auto op : kTwoCharOps) {
          if (rest.substr(0, 2) == op) len = 2;
        }
      }
      i += len;
      push(TokenKind::Punct, start, i);
    } else {
      return std::nullopt;
    }
  }
  return out;
}

std::vector<RenameCandidate> rename_candidates(std::string_view src,
                                               const std::vector<Token>& tokens) {
  (void)src;
  std::vector<const Token*> sig;
  sig.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::Comment) sig.push_back(&t);
  }

  std::set<std::string_view> excluded;
  std::set<std::string_view> bound;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const Token& t = *sig[i];
    if (t.kind != TokenKind::Identifier) continue;
    const Token* prev = i > 0 ? sig[i - 1] : nullptr;
    const Token* next = i + 1 < sig.size() ? sig[i + 1] : nullptr;

    if (next && next->text == "(") excluded.insert(t.text);
    if (prev && (prev->text == "." || prev->text == "::")) {
      excluded.insert(t.text);
      continue;
    }
    if (!next) continue;
    if (is_assign_op(next->text)) {
      bound.insert(t.text);
      continue;
    }
    if (prev && ends_declarator(next->text)) {
      const bool type_before = prev->kind == TokenKind::Identifier ||
                               (prev->kind == TokenKind::Keyword && is_primitive(prev->text)) ||
                               prev->text == "]";
      if (type_before) bound.insert(t.text);
    }
  }

  std::vector<RenameCandidate> result;
  std::map<std::string_view, std::size_t> slot;
  for (const Token* t : sig) {
    if (t->kind != TokenKind::Identifier) continue;
    if (!bound.contains(t->text) || excluded.contains(t->text)) continue;
    auto [it, inserted] = slot.try_emplace(t->text, result.size());
    if (inserted) result.push_back(RenameCandidate{std::string(t->text), {}});
    result[it->second].offsets.push_back(t->offset);
  }
  return result;
}

}  // namespace dnf::code
