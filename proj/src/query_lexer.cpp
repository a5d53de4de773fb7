// Copyright 2026 The Stripehouse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <array>
#include <cctype>

#include "stripehouse/error.hpp"
#include "stripehouse/query.hpp"

namespace stripehouse {

namespace {

constexpr std::array<std::string_view, 16> kKeywords = {
    "SELECT", "FROM", "JOIN", "ON",  "WHERE", "AND", "GROUP", "BY",
    "AS",     "COUNT", "DISTINCT", "SUM", "AVG", "MIN", "MAX", "BUCKET"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < n && ident_char(text[i])) ++i;
      const std::string_view word = text.substr(start, i - start);
      const std::string up = upper(word);
      bool keyword = false;
      for (auto kw : kKeywords) keyword = keyword || kw == up;
      if (keyword) {
        tokens.push_back({TokenKind::Keyword, up, start});
      } else {
        tokens.push_back({TokenKind::Identifier, to_lower(word), start});
      }
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < n && digit(text[i + 1]))) {
      bool is_float = false;
      while (i < n && digit(text[i])) ++i;
      if (i < n && text[i] == '.') {
        is_float = true;
        ++i;
        while (i < n && digit(text[i])) ++i;
      }
      if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < n && digit(text[j])) {
          is_float = true;
          i = j;
          while (i < n && digit(text[i])) ++i;
        }
      }
      if (i < n && ident_char(text[i])) {
        throw QueryTextError(ErrorCode::LexError, i, "illegal character in number");
      }
      tokens.push_back({is_float ? TokenKind::Float : TokenKind::Integer,
                        std::string(text.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '\'') {
          if (i + 1 < n && text[i + 1] == '\'') {
            value.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value.push_back(text[i++]);
      }
      if (!closed) throw QueryTextError(ErrorCode::LexError, start, "unterminated string literal");
      tokens.push_back({TokenKind::String, std::move(value), start});
      continue;
    }
    auto two = [&](std::string_view s) { return text.substr(i, 2) == s; };
    if (two("!=") || two("<>") || two("<=") || two(">=")) {
      std::string sym(text.substr(i, 2));
      if (sym == "<>") sym = "!=";
      tokens.push_back({TokenKind::Symbol, sym, start});
      i += 2;
      continue;
    }
    switch (c) {
      case '(': case ')': case ',': case '.': case '*': case '=': case '<': case '>': case '-':
        tokens.push_back({TokenKind::Symbol, std::string(1, c), start});
        ++i;
        continue;
      default:
        throw QueryTextError(ErrorCode::LexError, start,
                             "illegal character '" + std::string(1, c) + "'");
    }
  }
  tokens.push_back({TokenKind::End, "", n});
  return tokens;
}

}  // namespace stripehouse
