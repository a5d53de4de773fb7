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
#include <variant>
#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/predicate.hpp"
#include "stripehouse/types.hpp"

// Query subset:
//
//   query  := SELECT item {"," item} FROM tref [JOIN tref ON col "=" col]
//             [WHERE pred {AND pred}] [GROUP BY ident]
//   item   := (agg | bucket) [AS ident]
//   agg    := COUNT "(" "*" ")" | COUNT "(" DISTINCT col ")"
//           | (SUM | AVG | MIN | MAX) "(" col ")"
//   bucket := BUCKET "(" col "," num {"," num} ")"
//   tref   := ident [[AS] ident]
//   col    := ident ["." ident]
//   pred   := col ("=" | "!=" | "<>" | "<" | "<=" | ">" | ">=") literal

namespace stripehouse {

enum class TokenKind { Keyword, Identifier, Integer, Float, String, Symbol, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // keywords upper-cased, identifiers lower-cased, string literals unescaped
  std::size_t offset = 0;

  bool operator==(const Token&) const = default;
};

/// Throws QueryTextError(LexError).
std::vector<Token> tokenize(std::string_view text);

struct ColumnRef {
  std::string qualifier;  // empty when unqualified
  std::string name;
  bool operator==(const ColumnRef&) const = default;
};

enum class AggKind { CountStar, CountDistinct, Sum, Avg, Min, Max };

struct Aggregate {
  AggKind kind = AggKind::CountStar;
  std::optional<ColumnRef> column;
  bool operator==(const Aggregate&) const = default;
};

struct BucketExpr {
  ColumnRef column;
  std::vector<double> edges;
  bool operator==(const BucketExpr&) const = default;
};

struct SelectItem {
  std::variant<Aggregate, BucketExpr> expr;
  std::string alias;  // empty when absent
  bool operator==(const SelectItem&) const = default;
};

struct Predicate {
  ColumnRef column;
  CompareOp op = CompareOp::Eq;
  Value literal;  // int64, double or string as written
  bool operator==(const Predicate&) const = default;
};

struct TableRef {
  std::string name;
  std::string alias;
  bool operator==(const TableRef&) const = default;
};

struct JoinClause {
  TableRef table;
  ColumnRef left;
  ColumnRef right;
  bool operator==(const JoinClause&) const = default;
};

struct QueryAst {
  std::vector<SelectItem> items;
  TableRef from;
  std::optional<JoinClause> join;
  std::vector<Predicate> where;
  std::optional<std::string> group_by;
  bool operator==(const QueryAst&) const = default;
};

/// Throws QueryTextError(SyntaxError) naming the expected tokens.
QueryAst parse(const std::vector<Token>& tokens);
QueryAst parse(std::string_view text);

/// Canonical text; parse(unparse(ast)) == ast.
std::string unparse(const QueryAst& ast);

/// Table names in FROM / JOIN order.
std::vector<std::string> referenced_tables(const QueryAst& ast);

// Resolved form ----------------------------------------------------------

struct ResolvedColumn {
  std::size_t table = 0;  // index into ResolvedQuery::tables
  std::size_t column = 0;
  ColumnType type = ColumnType::Int64;
  std::string display;  // as written, e.g. "l.result_value"
  bool operator==(const ResolvedColumn&) const = default;
};

struct ResolvedAggregate {
  AggKind kind = AggKind::CountStar;
  std::optional<ResolvedColumn> column;
  ColumnType result_type = ColumnType::Int64;
  bool operator==(const ResolvedAggregate&) const = default;
};

struct ResolvedBucket {
  ResolvedColumn column;
  std::vector<double> edges;
  bool operator==(const ResolvedBucket&) const = default;
};

struct ResolvedTable {
  TableEntry entry;
  std::string alias;
  std::vector<ColumnPredicate> predicates;  // pushed-down conjuncts
  bool operator==(const ResolvedTable&) const = default;
};

struct OutputColumn {
  std::string name;
  ColumnType type = ColumnType::Int64;
  bool is_bucket = false;
  std::size_t aggregate = 0;  // index into aggregates when !is_bucket
  bool operator==(const OutputColumn&) const = default;
};

struct ResolvedQuery {
  std::vector<ResolvedTable> tables;  // [0] FROM, [1] JOIN
  std::optional<std::pair<ResolvedColumn, ResolvedColumn>> join;  // (table 0 col, table 1 col)
  std::vector<ResolvedAggregate> aggregates;
  std::optional<ResolvedBucket> bucket;
  std::vector<OutputColumn> outputs;  // SELECT order
  std::size_t resolved_refs = 0;
  bool operator==(const ResolvedQuery&) const = default;
};

/// Resolves names against the catalog and type-checks. Throws UnknownTable,
/// UnknownColumn, TypeError or NonIncreasingEdges.
ResolvedQuery validate(const QueryAst& ast, const Catalog& catalog);

/// Category index of `v` for strictly increasing `edges`: i such that
/// edges[i] <= v < edges[i+1], or nullopt outside [edges.front(), edges.back()).
std::optional<std::size_t> bucket_index(std::span<const double> edges, double v);

std::string_view agg_kind_name(AggKind kind);

}  // namespace stripehouse
