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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stripehouse/batch.hpp"
#include "stripehouse/types.hpp"

namespace stripehouse {

enum class CompareOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view compare_op_text(CompareOp op);

/// `column op literal` against a column of a stored table. The literal holds
/// the same Value alternative as the column's storage type.
struct ColumnPredicate {
  std::size_t column = 0;
  CompareOp op = CompareOp::Eq;
  Value literal;

  bool operator==(const ColumnPredicate&) const = default;
};

/// NULL fails every comparison; NaN satisfies only `!=`.
bool evaluate(CompareOp op, const Value& lhs, const Value& literal);

/// Clears selection[i] for every row of `col` that fails `pred`.
void filter_column(const ColumnVector& col, const ColumnPredicate& pred,
                   std::vector<std::uint8_t>& selection);

/// STRING min/max statistics keep at most this many leading bytes.
inline constexpr std::size_t kStringStatPrefix = 32;

/// Per-stripe statistics for one column. min/max are absent when the column
/// has no non-null, non-NaN values.
struct ColumnStats {
  ColumnType type = ColumnType::Int64;
  std::uint32_t row_count = 0;
  std::uint32_t null_count = 0;
  std::optional<Value> min;
  std::optional<Value> max;

  /// A STRING max cut at the prefix length is not an upper bound.
  bool max_is_upper_bound() const;
  /// A STRING min cut at the prefix length is a lower bound but not exact.
  bool min_is_exact() const;

  bool operator==(const ColumnStats&) const = default;
};

/// Exact statistics over a column slice, as written into stripe footers.
ColumnStats compute_stats(const ColumnVector& col, std::size_t begin, std::size_t end);

/// True iff the conjunction of `conjuncts` is provably false for every row
/// summarized by `stats` (indexed by table column). Sound: never returns true
/// when some row could satisfy all conjuncts.
bool stats_refute(std::span<const ColumnPredicate> conjuncts,
                  std::span<const ColumnStats> stats);

}  // namespace stripehouse
