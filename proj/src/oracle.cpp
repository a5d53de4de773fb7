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


// Reference evaluator used by tests. Deliberately naive: row-at-a-time, an
// ordered-map join, linear bucket search and ordered containers, sharing no
// execution code with the engine.

#include "stripehouse/oracle.hpp"

#include <cmath>
#include <map>
#include <set>

#include "stripehouse/error.hpp"
#include "stripehouse/rowtext.hpp"
#include "stripehouse/stripe.hpp"

namespace stripehouse {

namespace {

bool is_nan(const Value& v) {
  const auto* d = std::get_if<double>(&v);
  return d && std::isnan(*d);
}

bool passes(const ResolvedTable& t, const Row& row) {
  for (const ColumnPredicate& p : t.predicates) {
    if (is_null(row[p.column]) || !evaluate(p.op, row[p.column], p.literal)) return false;
  }
  return true;
}

std::optional<std::int64_t> linear_bucket(const std::vector<double>& edges, double v) {
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i] <= v && v < edges[i + 1]) return static_cast<std::int64_t>(i);
  }
  return std::nullopt;
}

double numeric(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return static_cast<double>(std::get<std::int64_t>(v));
}

struct State {
  std::int64_t count = 0;
  std::int64_t n = 0;
  double sum = 0;
  std::optional<Value> lo, hi;
  std::set<std::pair<bool, Value>> seen;
};

}  // namespace

ResultTable brute_force(const ResolvedQuery& q, const std::vector<std::vector<Row>>& tables) {
  if (tables.size() != q.tables.size()) throw Error(ErrorCode::Internal, "oracle given the wrong number of tables");

  // Materialize the joined rows as pairs of row pointers.
  std::vector<std::vector<const Row*>> joined;
  if (!q.join) {
    for (const Row& r : tables[0]) {
      if (passes(q.tables[0], r)) joined.push_back({&r});
    }
  } else {
    const std::size_t lcol = q.join->first.column;
    const std::size_t rcol = q.join->second.column;
    std::map<Value, std::vector<const Row*>> right;
    for (const Row& r : tables[1]) {
      if (!passes(q.tables[1], r) || is_null(r[rcol]) || is_nan(r[rcol])) continue;
      Value k = r[rcol];
      if (auto* d = std::get_if<double>(&k); d && *d == 0.0) *d = 0.0;
      right[k].push_back(&r);
    }
    for (const Row& l : tables[0]) {
      if (!passes(q.tables[0], l) || is_null(l[lcol]) || is_nan(l[lcol])) continue;
      Value k = l[lcol];
      if (auto* d = std::get_if<double>(&k); d && *d == 0.0) *d = 0.0;
      auto it = right.find(k);
      if (it == right.end()) continue;
      for (const Row* r : it->second) joined.push_back({&l, r});
    }
  }

  std::map<std::int64_t, std::vector<State>> groups;
  for (const auto& rows : joined) {
    std::int64_t key = 0;
    if (q.bucket) {
      const Value& v = (*rows[q.bucket->column.table])[q.bucket->column.column];
      if (is_null(v)) continue;
      const auto b = linear_bucket(q.bucket->edges, numeric(v));
      if (!b) continue;
      key = *b;
    }
    auto& states = groups[key];
    states.resize(q.aggregates.size());
    for (std::size_t a = 0; a < q.aggregates.size(); ++a) {
      const ResolvedAggregate& agg = q.aggregates[a];
      State& s = states[a];
      if (agg.kind == AggKind::CountStar) {
        ++s.count;
        continue;
      }
      const Value& v = (*rows[agg.column->table])[agg.column->column];
      if (is_null(v)) continue;
      switch (agg.kind) {
        case AggKind::CountDistinct: {
          Value k = v;
          if (auto* d = std::get_if<double>(&k); d && *d == 0.0) *d = 0.0;
          if (is_nan(k)) k = Value{};
          s.seen.insert({is_nan(v), k});
          break;
        }
        case AggKind::Sum:
        case AggKind::Avg:
          ++s.n;
          s.sum += numeric(v);
          break;
        case AggKind::Min:
          if (!is_nan(v) && (!s.lo || compare_values(v, *s.lo) < 0)) s.lo = v;
          break;
        case AggKind::Max:
          if (!is_nan(v) && (!s.hi || compare_values(v, *s.hi) > 0)) s.hi = v;
          break;
        case AggKind::CountStar: break;
      }
    }
  }
  if (!q.bucket && groups.empty()) groups[0].resize(q.aggregates.size());

  ResultTable out = empty_result(q);
  for (const auto& [key, states] : groups) {
    Row row;
    for (const OutputColumn& col : q.outputs) {
      if (col.is_bucket) {
        row.push_back(Value{key});
        continue;
      }
      const State& s = states[col.aggregate];
      switch (q.aggregates[col.aggregate].kind) {
        case AggKind::CountStar: row.push_back(Value{s.count}); break;
        case AggKind::CountDistinct: row.push_back(Value{static_cast<std::int64_t>(s.seen.size())}); break;
        case AggKind::Sum: row.push_back(s.n ? Value{s.sum} : Value{}); break;
        case AggKind::Avg: row.push_back(s.n ? Value{s.sum / static_cast<double>(s.n)} : Value{}); break;
        case AggKind::Min: row.push_back(s.lo ? *s.lo : Value{}); break;
        case AggKind::Max: row.push_back(s.hi ? *s.hi : Value{}); break;
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<Row> read_all_rows(const TableEntry& entry, const Catalog& catalog) {
  std::vector<std::size_t> all(entry.schema.columns.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<Row> out;
  const auto sink = [&](Batch&& b) {
    for (std::size_t i = 0; i < b.num_rows; ++i) out.push_back(b.row(i));
  };
  for (const PartitionDescriptor& p : entry.partitions) {
    const auto path = catalog.resolve(p);
    if (p.format == StorageFormat::Stripe) {
      scan_stripes(path, entry.schema, all, {}, false, sink);
    } else {
      scan_rowtext(path, entry.schema, all, {}, sink);
    }
  }
  return out;
}

}  // namespace stripehouse
