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

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stripehouse {

/// DATE values are signed days since 1970-01-01 and share the INT64 slot of
/// Value.
enum class ColumnType : std::uint8_t { Int64 = 0, Float64 = 1, String = 2, Date = 3 };

std::string_view column_type_name(ColumnType type);
/// Accepts INT64, FLOAT64, STRING, DATE (case-insensitive).
std::optional<ColumnType> parse_column_type(std::string_view text);

inline bool is_numeric(ColumnType t) {
  return t == ColumnType::Int64 || t == ColumnType::Float64;
}
inline bool uses_int_slot(ColumnType t) {
  return t == ColumnType::Int64 || t == ColumnType::Date;
}

using Value = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Value>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// True if `v` is null or holds the alternative that `type` is stored in.
bool value_matches_type(const Value& v, ColumnType type);

/// Three-way comparison of two non-null values holding the same alternative.
/// Doubles compare with IEEE semantics (NaN is unordered).
std::partial_ordering compare_values(const Value& a, const Value& b);

/// Total equality used for result comparison: nulls equal each other, doubles
/// compare bitwise-equal or numerically equal.
bool values_equal(const Value& a, const Value& b);

// Calendar helpers. Throws Error(ParseError) on malformed text.
std::int64_t parse_date(std::string_view text);
std::string format_date(std::int64_t days);
bool try_parse_date(std::string_view text, std::int64_t& out);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Text form used by storage and CSV: null -> "", DATE -> YYYY-MM-DD.
std::string format_value(const Value& v, ColumnType type);
/// Display form: null -> "NULL".
std::string display_value(const Value& v, ColumnType type);

/// Parses non-empty text as `type`. Returns nullopt if unparsable. Empty text
/// is not handled here; callers decide what an empty field means.
std::optional<Value> parse_value(std::string_view text, ColumnType type);

std::string to_lower(std::string_view s);

}  // namespace stripehouse
