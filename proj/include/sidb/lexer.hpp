#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sidb {

enum class TokenKind { kName, kNumber, kString, kOperator, kComment };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset = 0;  // byte offset into the scanned text
  int line = 1;            // 1-based
  int column = 1;          // 1-based byte column
  bool decimal_int = false;
};

/// Scanner for Python's surface syntax: names, numbers, string literals
/// (prefixes, triple quotes), comments and operators. Strict mode throws
/// E_UNLEXABLE_SOURCE on unterminated strings and stray characters; lenient
/// mode turns them into one-character operator tokens so prose scans too.
std::vector<Token> scan_tokens(std::string_view text, bool strict = true);

/// Comment-free token texts joined by single spaces; "" for blank lines.
std::string normalize_line(std::string_view line);
std::vector<std::string> line_tokens(std::string_view line);

}  // namespace sidb
