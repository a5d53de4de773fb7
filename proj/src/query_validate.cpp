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

#include <algorithm>
#include <cmath>

#include "stripehouse/error.hpp"
#include "stripehouse/query.hpp"

namespace stripehouse {

namespace {

class Resolver {
 public:
  Resolver(const QueryAst& ast, const Catalog& catalog) : ast_(ast) {
    add_table(ast.from, catalog);
    if (ast.join) add_table(ast.join->table, catalog);
    if (q_.tables.size() == 2 && q_.tables[0].alias == q_.tables[1].alias) {
      throw Error(ErrorCode::TypeError, "duplicate table alias '" + q_.tables[0].alias + "'");
    }
  }

  ResolvedQuery run() {
    if (ast_.join) resolve_join();
    for (const Predicate& p : ast_.where) resolve_predicate(p);

    std::size_t buckets = 0;
    for (const SelectItem& item : ast_.items) {
      OutputColumn out;
      if (const auto* agg = std::get_if<Aggregate>(&item.expr)) {
        out.aggregate = q_.aggregates.size();
        q_.aggregates.push_back(resolve_aggregate(*agg));
        out.type = q_.aggregates.back().result_type;
        out.name = item.alias.empty() ? default_name(*agg) : item.alias;
      } else {
        if (++buckets > 1) throw Error(ErrorCode::TypeError, "at most one BUCKET per query");
        q_.bucket = resolve_bucket(std::get<BucketExpr>(item.expr));
        out.is_bucket = true;
        out.type = ColumnType::Int64;
        out.name = item.alias.empty() ? "bucket" : item.alias;
        if (!ast_.group_by || *ast_.group_by != item.alias) {
          throw Error(ErrorCode::UnknownColumn, "BUCKET must be named by GROUP BY");
        }
      }
      q_.outputs.push_back(std::move(out));
    }
    if (ast_.group_by && !q_.bucket) {
      throw Error(ErrorCode::UnknownColumn, "GROUP BY " + *ast_.group_by + " does not name a BUCKET");
    }
    return std::move(q_);
  }

 private:
  void add_table(const TableRef& ref, const Catalog& catalog) {
    ResolvedTable t;
    t.entry = catalog.get_table(ref.name);
    t.alias = ref.alias.empty() ? t.entry.schema.table_name : ref.alias;
    q_.tables.push_back(std::move(t));
  }

  ResolvedColumn resolve(const ColumnRef& ref) {
    const std::string display = ref.qualifier.empty() ? ref.name : ref.qualifier + "." + ref.name;
    std::optional<ResolvedColumn> found;
    for (std::size_t t = 0; t < q_.tables.size(); ++t) {
      const ResolvedTable& table = q_.tables[t];
      if (!ref.qualifier.empty() && ref.qualifier != table.alias) continue;
      const auto idx = table.entry.schema.find_column(ref.name);
      if (!idx) continue;
      if (found) throw Error(ErrorCode::UnknownColumn, "ambiguous column '" + display + "'");
      found = ResolvedColumn{t, *idx, table.entry.schema.columns[*idx].type, display};
    }
    if (!found) throw Error(ErrorCode::UnknownColumn, "unknown column '" + display + "'");
    ++q_.resolved_refs;
    return *found;
  }

  void resolve_join() {
    ResolvedColumn a = resolve(ast_.join->left);
    ResolvedColumn b = resolve(ast_.join->right);
    if (a.table == b.table) throw Error(ErrorCode::TypeError, "join columns must come from different tables");
    if (a.table == 1) std::swap(a, b);
    if (a.type != b.type) {
      throw Error(ErrorCode::TypeError, "join compares " + std::string(column_type_name(a.type)) + " with " +
                                            std::string(column_type_name(b.type)));
    }
    q_.join = std::make_pair(std::move(a), std::move(b));
  }

  void resolve_predicate(const Predicate& p) {
    const ResolvedColumn col = resolve(p.column);
    const auto type_error = [&](const std::string& why) {
      throw Error(ErrorCode::TypeError, "predicate on " + col.display + ": " + why);
    };
    Value lit;
    switch (col.type) {
      case ColumnType::Int64:
        if (!std::holds_alternative<std::int64_t>(p.literal)) type_error("INT64 column needs an integer literal");
        lit = p.literal;
        break;
      case ColumnType::Float64:
        if (const auto* i = std::get_if<std::int64_t>(&p.literal)) lit = static_cast<double>(*i);
        else if (std::holds_alternative<double>(p.literal)) lit = p.literal;
        else type_error("FLOAT64 column needs a numeric literal");
        break;
      case ColumnType::Date: {
        const auto* s = std::get_if<std::string>(&p.literal);
        std::int64_t days = 0;
        if (!s || !try_parse_date(*s, days)) type_error("DATE column needs a 'YYYY-MM-DD' literal");
        lit = days;
        break;
      }
      case ColumnType::String:
        if (!std::holds_alternative<std::string>(p.literal)) type_error("STRING column needs a string literal");
        if (p.op != CompareOp::Eq && p.op != CompareOp::Ne) type_error("STRING supports only = and !=");
        lit = p.literal;
        break;
    }
    q_.tables[col.table].predicates.push_back({col.column, p.op, std::move(lit)});
  }

  ResolvedAggregate resolve_aggregate(const Aggregate& agg) {
    ResolvedAggregate r;
    r.kind = agg.kind;
    if (agg.kind == AggKind::CountStar) {
      r.result_type = ColumnType::Int64;
      return r;
    }
    r.column = resolve(*agg.column);
    const ColumnType t = r.column->type;
    switch (agg.kind) {
      case AggKind::CountDistinct: r.result_type = ColumnType::Int64; break;
      case AggKind::Sum:
      case AggKind::Avg:
      case AggKind::Min:
      case AggKind::Max:
        if (t == ColumnType::String) {
          throw Error(ErrorCode::TypeError,
                      std::string(agg_kind_name(agg.kind)) + " needs a numeric or DATE column");
        }
        r.result_type = (agg.kind == AggKind::Min || agg.kind == AggKind::Max) ? t : ColumnType::Float64;
        break;
      case AggKind::CountStar: break;
    }
    return r;
  }

  ResolvedBucket resolve_bucket(const BucketExpr& b) {
    ResolvedBucket r;
    r.column = resolve(b.column);
    if (!is_numeric(r.column.type)) throw Error(ErrorCode::TypeError, "BUCKET needs a numeric column");
    if (b.edges.size() < 2) throw Error(ErrorCode::NonIncreasingEdges, "BUCKET needs at least two edges");
    for (std::size_t i = 0; i + 1 < b.edges.size(); ++i) {
      if (!(b.edges[i] < b.edges[i + 1])) {
        throw Error(ErrorCode::NonIncreasingEdges, "BUCKET edges must be strictly increasing");
      }
    }
    r.edges = b.edges;
    return r;
  }

  static std::string default_name(const Aggregate& agg) {
    if (agg.kind == AggKind::CountStar) return "count(*)";
    std::string col = agg.column->qualifier.empty() ? agg.column->name
                                                    : agg.column->qualifier + "." + agg.column->name;
    if (agg.kind == AggKind::CountDistinct) return "count(distinct " + col + ")";
    return to_lower(agg_kind_name(agg.kind)) + "(" + col + ")";
  }

  const QueryAst& ast_;
  ResolvedQuery q_;
};

}  // namespace

ResolvedQuery validate(const QueryAst& ast, const Catalog& catalog) { return Resolver(ast, catalog).run(); }

std::optional<std::size_t> bucket_index(std::span<const double> edges, double v) {
  if (edges.size() < 2 || std::isnan(v) || v < edges.front() || !(v < edges.back())) return std::nullopt;
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

}  // namespace stripehouse
