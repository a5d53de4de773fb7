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

#include "stripehouse/ingest.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <variant>

#include "stripehouse/datagen.hpp"
#include "stripehouse/error.hpp"
#include "stripehouse/rowtext.hpp"

namespace stripehouse {

namespace {
constexpr std::size_t kCsvBuffer = 1 << 20;
}

int CsvReader::get() {
  if (pos_ == buf_.size()) {
    buf_.resize(kCsvBuffer);
    in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.resize(static_cast<std::size_t>(in_.gcount()));
    pos_ = 0;
    if (buf_.empty()) return EOF;
  }
  return static_cast<unsigned char>(buf_[pos_++]);
}

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  int c = get();
  if (c == EOF) return false;
  ++record_;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  for (;; c = get()) {
    if (in_quotes) {
      if (c == EOF) {
        throw Error(ErrorCode::ParseError, "record " + std::to_string(record_) + ": unterminated quoted field");
      }
      if (c == '"') {
        const int d = get();
        if (d == '"') {
          field.push_back('"');
          continue;
        }
        in_quotes = false;
        c = d;
      } else {
        field.push_back(static_cast<char>(c));
        continue;
      }
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\n' || c == EOF) {
      if (!field.empty() && field.back() == '\r' && !was_quoted) field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\r' && was_quoted) {
      // CR after a closing quote; the LF follows.
    } else if (c == '"') {
      if (!field.empty() || was_quoted) {
        throw Error(ErrorCode::ParseError,
                    "record " + std::to_string(record_) + ": quote inside unquoted field");
      }
      in_quotes = true;
      was_quoted = true;
    } else {
      if (was_quoted) {
        throw Error(ErrorCode::ParseError,
                    "record " + std::to_string(record_) + ": text after closing quote");
      }
      field.push_back(static_cast<char>(c));
    }
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

using PartitionWriter = std::variant<std::unique_ptr<RowTextWriter>, std::unique_ptr<StripeWriter>>;

}  // namespace

TableEntry ingest_csv(Catalog& catalog, const std::filesystem::path& csv, std::string_view table,
                      const IngestOptions& options) {
  if (options.partitions == 0) throw Error(ErrorCode::InvalidSchema, "partition count must be positive");
  if (options.stripe_size == 0) throw Error(ErrorCode::InvalidSchema, "stripe_size must be positive");
  if (!catalog.has_table(table)) {
    // The generator's tables can be loaded without an explicit create.
    if (auto schema = builtin_schema(table)) catalog.create_table(std::move(*schema), options.format);
  }
  const TableEntry entry = catalog.get_table(table);
  if (entry.format != options.format) {
    throw Error(ErrorCode::FormatMismatch, "table '" + entry.schema.table_name + "' is " +
                                               std::string(storage_format_name(entry.format)));
  }
  const TableSchema& schema = entry.schema;

  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + csv.string());
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw Error(ErrorCode::HeaderMismatch, csv.string() + ": missing header row");

  // header position -> schema column
  std::vector<std::size_t> column_of(fields.size());
  std::vector<bool> seen(schema.columns.size(), false);
  if (fields.size() != schema.columns.size()) {
    throw Error(ErrorCode::HeaderMismatch, "header has " + std::to_string(fields.size()) +
                                               " names, table has " + std::to_string(schema.columns.size()));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto idx = schema.find_column(fields[i]);
    if (!idx || seen[*idx]) throw Error(ErrorCode::HeaderMismatch, "unexpected header name '" + fields[i] + "'");
    seen[*idx] = true;
    column_of[i] = *idx;
  }

  const std::uint32_t base = static_cast<std::uint32_t>(entry.partitions.size());
  std::vector<PartitionDescriptor> descs;
  std::vector<PartitionWriter> writers;
  for (std::uint32_t p = 0; p < options.partitions; ++p) {
    PartitionDescriptor d;
    d.partition_id = base + p;
    d.worker_id = d.partition_id % std::max<std::uint32_t>(1, options.workers);
    d.format = options.format;
    char name[32];
    std::snprintf(name, sizeof name, "part-%05u", d.partition_id);
    d.path = (std::filesystem::path("tables") / schema.table_name /
              (std::string(name) + std::string(storage_extension(options.format))))
                 .string();
    const auto full = catalog.data_root() / d.path;
    if (options.format == StorageFormat::RowText) {
      writers.emplace_back(std::make_unique<RowTextWriter>(full, schema));
    } else {
      writers.emplace_back(std::make_unique<StripeWriter>(full, schema, options.stripe_size));
    }
    descs.push_back(std::move(d));
  }

  Row row(schema.columns.size());
  std::uint64_t n = 0;
  while (reader.next(fields)) {
    const std::uint64_t record = reader.record_number();
    if (fields.size() == 1 && fields[0].empty() && column_of.size() > 1) continue;  // blank line
    if (fields.size() != column_of.size()) {
      throw Error(ErrorCode::ArityError, "record " + std::to_string(record) + ": expected " +
                                             std::to_string(column_of.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const ColumnDef& def = schema.columns[column_of[i]];
      if (fields[i].empty()) {
        if (!def.nullable) {
          throw Error(ErrorCode::ParseError, "record " + std::to_string(record) + " column " +
                                                 std::to_string(i + 1) + ": NULL in non-nullable column " +
                                                 def.name);
        }
        row[column_of[i]] = Value{};
        continue;
      }
      auto v = parse_value(fields[i], def.type);
      if (!v) {
        throw Error(ErrorCode::ParseError, "record " + std::to_string(record) + " column " +
                                               std::to_string(i + 1) + ": cannot parse '" + fields[i] +
                                               "' as " + std::string(column_type_name(def.type)));
      }
      row[column_of[i]] = std::move(*v);
    }
    const std::size_t target = static_cast<std::size_t>((n / options.stripe_size) % options.partitions);
    std::visit([&](auto& w) { w->append(row); }, writers[target]);
    ++n;
  }

  for (std::size_t p = 0; p < writers.size(); ++p) {
    descs[p].row_count = std::visit([](auto& w) { return w->finish(); }, writers[p]);
  }
  TableEntry result = entry;
  for (auto& d : descs) result = catalog.register_partition(schema.table_name, d);
  return result;
}

}  // namespace stripehouse
