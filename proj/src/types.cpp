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

#include "stripehouse/types.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>

#include "stripehouse/error.hpp"

namespace stripehouse {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateTable: return "DuplicateTable";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::NonContiguousPartitionId: return "NonContiguousPartitionId";
    case ErrorCode::FormatMismatch: return "FormatMismatch";
    case ErrorCode::IllegalCharacter: return "IllegalCharacter";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::CorruptFooter: return "CorruptFooter";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::LexError: return "LexError";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::NonIncreasingEdges: return "NonIncreasingEdges";
    case ErrorCode::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case ErrorCode::Internal: return "Internal";
    case ErrorCode::Protocol: return "PROTOCOL";
    case ErrorCode::Auth: return "AUTH";
    case ErrorCode::Forbidden: return "FORBIDDEN";
  }
  return "Unknown";
}

std::string_view column_type_name(ColumnType type) {
  switch (type) {
    case ColumnType::Int64: return "INT64";
    case ColumnType::Float64: return "FLOAT64";
    case ColumnType::String: return "STRING";
    case ColumnType::Date: return "DATE";
  }
  return "?";
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<ColumnType> parse_column_type(std::string_view text) {
  const std::string t = to_lower(text);
  if (t == "int64") return ColumnType::Int64;
  if (t == "float64") return ColumnType::Float64;
  if (t == "string") return ColumnType::String;
  if (t == "date") return ColumnType::Date;
  return std::nullopt;
}

bool value_matches_type(const Value& v, ColumnType type) {
  if (is_null(v)) return true;
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: return std::holds_alternative<std::int64_t>(v);
    case ColumnType::Float64: return std::holds_alternative<double>(v);
    case ColumnType::String: return std::holds_alternative<std::string>(v);
  }
  return false;
}

std::partial_ordering compare_values(const Value& a, const Value& b) {
  if (const auto* ai = std::get_if<std::int64_t>(&a)) {
    return *ai <=> std::get<std::int64_t>(b);
  }
  if (const auto* ad = std::get_if<double>(&a)) {
    return *ad <=> std::get<double>(b);
  }
  const auto& as = std::get<std::string>(a);
  const auto& bs = std::get<std::string>(b);
  const int c = as.compare(bs);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

bool values_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ad = std::get_if<double>(&a)) {
    const double bd = std::get<double>(b);
    return *ad == bd || (std::isnan(*ad) && std::isnan(bd));
  }
  return a == b;
}

namespace {

bool parse_fixed_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

bool try_parse_date(std::string_view text, std::int64_t& out) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  int y = 0, m = 0, d = 0;
  if (!parse_fixed_int(text.substr(0, 4), y) || !parse_fixed_int(text.substr(5, 2), m) ||
      !parse_fixed_int(text.substr(8, 2), d)) {
    return false;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  out = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return true;
}

std::int64_t parse_date(std::string_view text) {
  std::int64_t days = 0;
  if (!try_parse_date(text, days)) {
    throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
  }
  return days;
}

std::string format_date(std::int64_t days) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_value(const Value& v, ColumnType type) {
  if (is_null(v)) return {};
  switch (type) {
    case ColumnType::Int64: return std::to_string(std::get<std::int64_t>(v));
    case ColumnType::Date: return format_date(std::get<std::int64_t>(v));
    case ColumnType::Float64: return format_double(std::get<double>(v));
    case ColumnType::String: return std::get<std::string>(v);
  }
  return {};
}

std::string display_value(const Value& v, ColumnType type) {
  if (is_null(v)) return "NULL";
  return format_value(v, type);
}

std::optional<Value> parse_value(std::string_view text, ColumnType type) {
  switch (type) {
    case ColumnType::Int64: {
      std::int64_t x = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
      if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) return std::nullopt;
      return Value{x};
    }
    case ColumnType::Float64: {
      double x = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
      if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) return std::nullopt;
      return Value{x};
    }
    case ColumnType::Date: {
      std::int64_t days = 0;
      if (!try_parse_date(text, days)) return std::nullopt;
      return Value{days};
    }
    case ColumnType::String: return Value{std::string(text)};
  }
  return std::nullopt;
}

}  // namespace stripehouse
