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

#include "stripehouse/predicate.hpp"

#include <cmath>
#include <compare>
#include <map>

namespace stripehouse {

std::string_view compare_op_text(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

namespace {

bool holds(CompareOp op, std::partial_ordering c) {
  if (c == std::partial_ordering::unordered) return op == CompareOp::Ne;
  switch (op) {
    case CompareOp::Eq: return c == 0;
    case CompareOp::Ne: return c != 0;
    case CompareOp::Lt: return c < 0;
    case CompareOp::Le: return c <= 0;
    case CompareOp::Gt: return c > 0;
    case CompareOp::Ge: return c >= 0;
  }
  return false;
}

template <typename T>
void filter_typed(const std::vector<T>& data, const std::vector<std::uint8_t>& nulls, CompareOp op,
                  const T& lit, std::vector<std::uint8_t>& sel) {
  const std::size_t n = nulls.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!sel[i]) continue;
    if (nulls[i] || !holds(op, data[i] <=> lit)) sel[i] = 0;
  }
}

}  // namespace

bool evaluate(CompareOp op, const Value& lhs, const Value& literal) {
  if (is_null(lhs) || is_null(literal)) return false;
  return holds(op, compare_values(lhs, literal));
}

void filter_column(const ColumnVector& col, const ColumnPredicate& pred,
                   std::vector<std::uint8_t>& selection) {
  if (is_null(pred.literal)) {
    std::fill(selection.begin(), selection.end(), 0);
    return;
  }
  switch (col.type) {
    case ColumnType::Int64:
    case ColumnType::Date:
      filter_typed(col.ints, col.nulls, pred.op, std::get<std::int64_t>(pred.literal), selection);
      break;
    case ColumnType::Float64:
      filter_typed(col.floats, col.nulls, pred.op, std::get<double>(pred.literal), selection);
      break;
    case ColumnType::String: {
      const auto& lit = std::get<std::string>(pred.literal);
      const std::size_t n = col.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (!selection[i]) continue;
        if (col.nulls[i]) {
          selection[i] = 0;
          continue;
        }
        const int c = col.strings[i].compare(lit);
        const auto ord = c < 0 ? std::partial_ordering::less
                               : (c > 0 ? std::partial_ordering::greater
                                        : std::partial_ordering::equivalent);
        if (!holds(pred.op, ord)) selection[i] = 0;
      }
      break;
    }
  }
}

bool ColumnStats::max_is_upper_bound() const {
  if (!max) return false;
  if (type != ColumnType::String) return true;
  return std::get<std::string>(*max).size() < kStringStatPrefix;
}

bool ColumnStats::min_is_exact() const {
  if (!min) return false;
  if (type != ColumnType::String) return true;
  return std::get<std::string>(*min).size() < kStringStatPrefix;
}

ColumnStats compute_stats(const ColumnVector& col, std::size_t begin, std::size_t end) {
  ColumnStats s;
  s.type = col.type;
  s.row_count = static_cast<std::uint32_t>(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    if (col.nulls[i]) {
      ++s.null_count;
      continue;
    }
    switch (col.type) {
      case ColumnType::Int64:
      case ColumnType::Date: {
        const std::int64_t v = col.ints[i];
        if (!s.min || v < std::get<std::int64_t>(*s.min)) s.min = Value{v};
        if (!s.max || v > std::get<std::int64_t>(*s.max)) s.max = Value{v};
        break;
      }
      case ColumnType::Float64: {
        const double v = col.floats[i];
        if (std::isnan(v)) break;
        if (!s.min || v < std::get<double>(*s.min)) s.min = Value{v};
        if (!s.max || v > std::get<double>(*s.max)) s.max = Value{v};
        break;
      }
      case ColumnType::String: {
        const std::string& v = col.strings[i];
        if (!s.min || v < std::get<std::string>(*s.min)) s.min = Value{v};
        if (!s.max || v > std::get<std::string>(*s.max)) s.max = Value{v};
        break;
      }
    }
  }
  if (col.type == ColumnType::String) {
    // A prefix of the true min is still <= every value; the cut max is
    // flagged via max_is_upper_bound().
    for (auto* bound : {&s.min, &s.max}) {
      if (*bound) {
        auto& str = std::get<std::string>(**bound);
        if (str.size() > kStringStatPrefix) str.resize(kStringStatPrefix);
      }
    }
  }
  return s;
}

namespace {

struct Bound {
  Value value;
  bool inclusive = true;
};

bool is_nan_literal(const Value& v) {
  const auto* d = std::get_if<double>(&v);
  return d && std::isnan(*d);
}

// Tightens a lower bound: keeps the larger value, exclusive wins ties.
void tighten_lower(std::optional<Bound>& cur, const Value& v, bool inclusive) {
  if (!cur) {
    cur = Bound{v, inclusive};
    return;
  }
  const auto c = compare_values(v, cur->value);
  if (c > 0 || (c == 0 && !inclusive)) cur = Bound{v, inclusive};
}

void tighten_upper(std::optional<Bound>& cur, const Value& v, bool inclusive) {
  if (!cur) {
    cur = Bound{v, inclusive};
    return;
  }
  const auto c = compare_values(v, cur->value);
  if (c < 0 || (c == 0 && !inclusive)) cur = Bound{v, inclusive};
}

bool column_refuted(const std::vector<const ColumnPredicate*>& preds, const ColumnStats& stats) {
  if (stats.row_count > 0 && stats.null_count == stats.row_count) return true;

  std::optional<Bound> lo;
  std::optional<Bound> hi;
  std::vector<const Value*> excluded;
  for (const ColumnPredicate* p : preds) {
    if (is_null(p->literal)) return true;
    if (is_nan_literal(p->literal)) {
      // x != NaN holds for every non-NaN x; comparisons with NaN never hold.
      if (p->op == CompareOp::Ne) continue;
      return true;
    }
    switch (p->op) {
      case CompareOp::Eq:
        tighten_lower(lo, p->literal, true);
        tighten_upper(hi, p->literal, true);
        break;
      case CompareOp::Ne: excluded.push_back(&p->literal); break;
      case CompareOp::Lt: tighten_upper(hi, p->literal, false); break;
      case CompareOp::Le: tighten_upper(hi, p->literal, true); break;
      case CompareOp::Gt: tighten_lower(lo, p->literal, false); break;
      case CompareOp::Ge: tighten_lower(lo, p->literal, true); break;
    }
  }

  // The satisfying set alone may already be empty.
  if (lo && hi) {
    const auto c = compare_values(lo->value, hi->value);
    if (c > 0) return true;
    if (c == 0) {
      if (!lo->inclusive || !hi->inclusive) return true;
      for (const Value* ex : excluded) {
        if (compare_values(*ex, lo->value) == 0) return true;
      }
    }
  }

  if (!stats.min) return false;  // no usable range (e.g. only NaN values)
  const Value& mn = *stats.min;
  if (hi) {
    const auto c = compare_values(hi->value, mn);
    if (c < 0 || (c == 0 && !hi->inclusive)) return true;
  }
  if (lo && stats.max_is_upper_bound()) {
    const auto c = compare_values(lo->value, *stats.max);
    if (c > 0 || (c == 0 && !lo->inclusive)) return true;
  }
  // Every non-null value equals min == max; an excluded literal equal to it
  // refutes the stripe. Skipped for FLOAT64, where NaN rows would satisfy !=.
  if (stats.type != ColumnType::Float64 && stats.min_is_exact() && stats.max_is_upper_bound() &&
      compare_values(mn, *stats.max) == 0) {
    for (const Value* ex : excluded) {
      if (compare_values(*ex, mn) == 0) return true;
    }
  }
  return false;
}

}  // namespace

bool stats_refute(std::span<const ColumnPredicate> conjuncts, std::span<const ColumnStats> stats) {
  std::map<std::size_t, std::vector<const ColumnPredicate*>> by_column;
  for (const auto& p : conjuncts) by_column[p.column].push_back(&p);
  for (const auto& [column, preds] : by_column) {
    if (column >= stats.size()) continue;
    if (column_refuted(preds, stats[column])) return true;
  }
  return false;
}

}  // namespace stripehouse
