#include "sidb/lexer.hpp"

#include <array>
#include <cctype>
#include <cstring>

#include "sidb/error.hpp"

namespace sidb {

namespace {

constexpr std::array<std::string_view, 24> kMultiOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "+=",
    "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "@=", "**", "//", "<<", ">>"};
constexpr std::string_view kSingleOps = "+-*/%@&|^~<>()[]{},:;.=!";

bool is_name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_name_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view p) {
  if (p.size() > 2) return false;
  for (char c : p) {
    char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l != 'r' && l != 'b' && l != 'f' && l != 'u') return false;
  }
  return true;
}

class Scanner {
 public:
  Scanner(std::string_view text, bool strict) : s_(text), strict_(strict) {}

  std::vector<Token> run() {
    while (i_ < s_.size()) {
      unsigned char c = s_[i_];
      if (c == '\n') {
        advance(1);
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        advance(1);
        continue;
      }
      if (c == '\\' && i_ + 1 < s_.size() && (s_[i_ + 1] == '\n' || s_[i_ + 1] == '\r')) {
        advance(1);
        continue;
      }
      if (c == '#') {
        auto end = s_.find('\n', i_);
        if (end == std::string_view::npos) end = s_.size();
        emit(TokenKind::kComment, end - i_);
        continue;
      }
      if (c == '\'' || c == '"') {
        string_literal(0);
        continue;
      }
      if (is_name_start(c)) {
        std::size_t j = i_;
        while (j < s_.size() && is_name_char(static_cast<unsigned char>(s_[j]))) ++j;
        if (j < s_.size() && (s_[j] == '\'' || s_[j] == '"') && is_string_prefix(s_.substr(i_, j - i_))) {
          string_literal(j - i_);
          continue;
        }
        emit(TokenKind::kName, j - i_);
        continue;
      }
      if (std::isdigit(c) || (c == '.' && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
        number();
        continue;
      }
      bool matched = false;
      for (auto op : kMultiOps) {
        if (s_.substr(i_, op.size()) == op) {
          emit(TokenKind::kOperator, op.size());
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (kSingleOps.find(static_cast<char>(c)) != std::string_view::npos) {
        emit(TokenKind::kOperator, 1);
        continue;
      }
      if (strict_) fail("unexpected character '" + std::string(1, static_cast<char>(c)) + "'");
      emit(TokenKind::kOperator, 1);
    }
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw Error(ErrorCode::kUnlexableSource,
                what + " at line " + std::to_string(line_) + ", column " + std::to_string(col_));
  }

  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n && i_ < s_.size(); ++k, ++i_) {
      if (s_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void emit(TokenKind kind, std::size_t len, bool decimal_int = false) {
    out_.push_back(Token{kind, std::string(s_.substr(i_, len)), i_, line_, col_, decimal_int});
    advance(len);
  }

  void number() {
    std::size_t j = i_;
    bool decimal_int = true;
    if (s_[j] == '0' && j + 1 < s_.size() && std::strchr("xXoObB", s_[j + 1]) != nullptr && s_[j + 1] != '\0') {
      j += 2;
      decimal_int = false;
      while (j < s_.size() && (std::isxdigit(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
    } else {
      while (j < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
      if (j < s_.size() && s_[j] == '.') {
        decimal_int = false;
        ++j;
        while (j < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
      }
      if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
        if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
          decimal_int = false;
          j = k;
          while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
        }
      }
      if (j < s_.size() && (s_[j] == 'j' || s_[j] == 'J')) {
        decimal_int = false;
        ++j;
      }
    }
    emit(TokenKind::kNumber, j - i_, decimal_int);
  }

  void string_literal(std::size_t prefix_len) {
    std::size_t q = i_ + prefix_len;
    char quote = s_[q];
    bool triple = s_.substr(q, 3) == std::string(3, quote);
    std::size_t j = q + (triple ? 3 : 1);
    while (j < s_.size()) {
      char c = s_[j];
      if (c == '\\') {
        j += 2;
        continue;
      }
      if (triple) {
        if (s_.substr(j, 3) == std::string(3, quote)) {
          emit(TokenKind::kString, j + 3 - i_);
          return;
        }
      } else {
        if (c == quote) {
          emit(TokenKind::kString, j + 1 - i_);
          return;
        }
        if (c == '\n') break;
      }
      ++j;
    }
    if (strict_) fail("unterminated string literal");
    // Lenient: the prefix (if any) is a name, the quote a lone operator.
    if (prefix_len > 0) emit(TokenKind::kName, prefix_len);
    emit(TokenKind::kOperator, 1);
  }

  std::string_view s_;
  bool strict_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> scan_tokens(std::string_view text, bool strict) { return Scanner(text, strict).run(); }

std::vector<std::string> line_tokens(std::string_view line) {
  std::vector<std::string> out;
  for (auto& t : scan_tokens(line, false)) {
    if (t.kind != TokenKind::kComment) out.push_back(std::move(t.text));
  }
  return out;
}

std::string normalize_line(std::string_view line) {
  std::string out;
  for (const auto& t : line_tokens(line)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace sidb
