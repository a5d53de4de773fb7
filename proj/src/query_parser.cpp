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

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <sstream>

#include "stripehouse/error.hpp"
#include "stripehouse/query.hpp"

namespace stripehouse {

namespace {

std::string describe(const Token& t) {
  switch (t.kind) {
    case TokenKind::End: return "end of input";
    case TokenKind::String: return "string literal";
    default: return "'" + t.text + "'";
  }
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {
    if (tokens_.empty() || tokens_.back().kind != TokenKind::End) {
      throw Error(ErrorCode::Internal, "token list must end with End");
    }
  }

  QueryAst query() {
    QueryAst ast;
    keyword("SELECT");
    ast.items.push_back(select_item());
    while (accept_symbol(",")) ast.items.push_back(select_item());
    keyword("FROM");
    ast.from = table_ref();
    if (accept_keyword("JOIN")) {
      JoinClause join;
      join.table = table_ref();
      keyword("ON");
      join.left = column();
      symbol("=");
      join.right = column();
      ast.join = std::move(join);
    }
    if (accept_keyword("WHERE")) {
      ast.where.push_back(predicate());
      while (accept_keyword("AND")) ast.where.push_back(predicate());
    }
    if (accept_keyword("GROUP")) {
      keyword("BY");
      ast.group_by = identifier("group key");
    }
    if (peek().kind != TokenKind::End) fail({"end of input"});
    return ast;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(std::initializer_list<std::string_view> expected) const {
    std::ostringstream msg;
    msg << "expected ";
    bool first = true;
    for (auto e : expected) {
      msg << (first ? "" : " or ") << e;
      first = false;
    }
    msg << " but found " << describe(peek());
    throw QueryTextError(ErrorCode::SyntaxError, peek().offset, msg.str());
  }

  bool is_keyword(std::string_view kw) const {
    return peek().kind == TokenKind::Keyword && peek().text == kw;
  }
  bool is_symbol(std::string_view s) const {
    return peek().kind == TokenKind::Symbol && peek().text == s;
  }
  bool accept_keyword(std::string_view kw) {
    if (!is_keyword(kw)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!is_symbol(s)) return false;
    advance();
    return true;
  }
  void keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail({kw});
  }
  void symbol(std::string_view s) {
    if (!accept_symbol(s)) fail({"'" + std::string(s) + "'"});
  }
  std::string identifier(std::string_view what) {
    if (peek().kind != TokenKind::Identifier) fail({what});
    return advance().text;
  }

  ColumnRef column() {
    ColumnRef ref;
    ref.name = identifier("column name");
    if (accept_symbol(".")) {
      ref.qualifier = std::move(ref.name);
      ref.name = identifier("column name");
    }
    return ref;
  }

  TableRef table_ref() {
    TableRef ref;
    ref.name = identifier("table name");
    if (accept_keyword("AS")) {
      ref.alias = identifier("table alias");
    } else if (peek().kind == TokenKind::Identifier) {
      ref.alias = advance().text;
    }
    return ref;
  }

  SelectItem select_item() {
    SelectItem item;
    if (is_keyword("BUCKET")) {
      item.expr = bucket();
    } else if (is_keyword("COUNT") || is_keyword("SUM") || is_keyword("AVG") || is_keyword("MIN") ||
               is_keyword("MAX")) {
      item.expr = aggregate();
    } else {
      fail({"select item (COUNT, SUM, AVG, MIN, MAX or BUCKET)"});
    }
    if (accept_keyword("AS")) item.alias = identifier("alias");
    return item;
  }

  Aggregate aggregate() {
    Aggregate agg;
    const std::string kw = advance().text;
    symbol("(");
    if (kw == "COUNT") {
      if (accept_symbol("*")) {
        agg.kind = AggKind::CountStar;
      } else if (accept_keyword("DISTINCT")) {
        agg.kind = AggKind::CountDistinct;
        agg.column = column();
      } else {
        fail({"'*'", "DISTINCT"});
      }
    } else {
      agg.kind = kw == "SUM" ? AggKind::Sum : kw == "AVG" ? AggKind::Avg : kw == "MIN" ? AggKind::Min : AggKind::Max;
      agg.column = column();
    }
    symbol(")");
    return agg;
  }

  double number() {
    const bool negative = accept_symbol("-");
    const Token& t = peek();
    if (t.kind != TokenKind::Integer && t.kind != TokenKind::Float) fail({"number"});
    advance();
    double v = 0;
    std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    return negative ? -v : v;
  }

  BucketExpr bucket() {
    BucketExpr b;
    keyword("BUCKET");
    symbol("(");
    b.column = column();
    symbol(",");
    b.edges.push_back(number());
    while (accept_symbol(",")) b.edges.push_back(number());
    symbol(")");
    return b;
  }

  Value literal() {
    const bool negative = accept_symbol("-");
    const Token& t = peek();
    if (t.kind == TokenKind::Integer) {
      advance();
      std::int64_t v = 0;
      // Parse with the sign attached so INT64_MIN is representable.
      const std::string text = (negative ? "-" : "") + t.text;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{}) throw QueryTextError(ErrorCode::SyntaxError, t.offset, "integer literal out of range");
      return Value{v};
    }
    if (t.kind == TokenKind::Float) {
      advance();
      double v = 0;
      std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      return Value{negative ? -v : v};
    }
    if (!negative && t.kind == TokenKind::String) return Value{advance().text};
    fail({"literal"});
  }

  Predicate predicate() {
    Predicate p;
    p.column = column();
    const Token& t = peek();
    if (t.kind != TokenKind::Symbol) fail({"comparison operator"});
    if (t.text == "=") p.op = CompareOp::Eq;
    else if (t.text == "!=") p.op = CompareOp::Ne;
    else if (t.text == "<") p.op = CompareOp::Lt;
    else if (t.text == "<=") p.op = CompareOp::Le;
    else if (t.text == ">") p.op = CompareOp::Gt;
    else if (t.text == ">=") p.op = CompareOp::Ge;
    else fail({"comparison operator"});
    advance();
    p.literal = literal();
    return p;
  }

  const std::vector<Token>& tokens_;
  std::size_t pos_ = 0;
};

std::string column_text(const ColumnRef& c) {
  return c.qualifier.empty() ? c.name : c.qualifier + "." + c.name;
}

std::string number_text(double v) {
  std::string s = format_double(v);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string literal_text(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return number_text(*d);
  std::string out = "'";
  for (char c : std::get<std::string>(v)) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string table_text(const TableRef& t) { return t.alias.empty() ? t.name : t.name + " " + t.alias; }

}  // namespace

std::string_view agg_kind_name(AggKind kind) {
  switch (kind) {
    case AggKind::CountStar:
    case AggKind::CountDistinct: return "COUNT";
    case AggKind::Sum: return "SUM";
    case AggKind::Avg: return "AVG";
    case AggKind::Min: return "MIN";
    case AggKind::Max: return "MAX";
  }
  return "?";
}

QueryAst parse(const std::vector<Token>& tokens) { return Parser(tokens).query(); }

QueryAst parse(std::string_view text) { return parse(tokenize(text)); }

std::string unparse(const QueryAst& ast) {
  std::ostringstream os;
  os << "SELECT ";
  for (std::size_t i = 0; i < ast.items.size(); ++i) {
    if (i) os << ", ";
    const SelectItem& item = ast.items[i];
    if (const auto* agg = std::get_if<Aggregate>(&item.expr)) {
      os << agg_kind_name(agg->kind) << "(";
      if (agg->kind == AggKind::CountStar) os << "*";
      else if (agg->kind == AggKind::CountDistinct) os << "DISTINCT " << column_text(*agg->column);
      else os << column_text(*agg->column);
      os << ")";
    } else {
      const auto& b = std::get<BucketExpr>(item.expr);
      os << "BUCKET(" << column_text(b.column);
      for (double e : b.edges) os << ", " << number_text(e);
      os << ")";
    }
    if (!item.alias.empty()) os << " AS " << item.alias;
  }
  os << " FROM " << table_text(ast.from);
  if (ast.join) {
    os << " JOIN " << table_text(ast.join->table) << " ON " << column_text(ast.join->left) << " = "
       << column_text(ast.join->right);
  }
  for (std::size_t i = 0; i < ast.where.size(); ++i) {
    const Predicate& p = ast.where[i];
    os << (i ? " AND " : " WHERE ") << column_text(p.column) << " " << compare_op_text(p.op) << " "
       << literal_text(p.literal);
  }
  if (ast.group_by) os << " GROUP BY " << *ast.group_by;
  return os.str();
}

std::vector<std::string> referenced_tables(const QueryAst& ast) {
  std::vector<std::string> out{ast.from.name};
  if (ast.join) out.push_back(ast.join->table.name);
  return out;
}

}  // namespace stripehouse
