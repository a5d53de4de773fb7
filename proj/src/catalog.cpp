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

#include "stripehouse/catalog.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stripehouse/error.hpp"

namespace stripehouse {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view storage_format_name(StorageFormat f) {
  return f == StorageFormat::RowText ? "rowtext" : "stripe";
}

std::optional<StorageFormat> parse_storage_format(std::string_view text) {
  const std::string t = to_lower(text);
  if (t == "rowtext" || t == "text" || t == "textfile") return StorageFormat::RowText;
  if (t == "stripe" || t == "orc") return StorageFormat::Stripe;
  return std::nullopt;
}

std::string_view storage_extension(StorageFormat f) {
  return f == StorageFormat::RowText ? ".rtx" : ".stp";
}

std::optional<std::size_t> TableSchema::find_column(std::string_view name) const {
  const std::string lowered = to_lower(name);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == lowered) return i;
  }
  return std::nullopt;
}

std::vector<ColumnType> TableSchema::types() const {
  std::vector<ColumnType> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.type);
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) { return (c >= 'a' && c <= 'z') || c == '_'; };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(s[0])) return false;
  for (char c : s.substr(1)) {
    if (!tail(c)) return false;
  }
  return true;
}

TableSchema normalize_schema(TableSchema schema) {
  schema.table_name = to_lower(schema.table_name);
  if (!is_identifier(schema.table_name)) {
    throw Error(ErrorCode::InvalidSchema, "invalid table name '" + schema.table_name + "'");
  }
  if (schema.columns.empty()) {
    throw Error(ErrorCode::InvalidSchema, "table '" + schema.table_name + "' has no columns");
  }
  std::set<std::string> seen;
  for (auto& c : schema.columns) {
    c.name = to_lower(c.name);
    if (!is_identifier(c.name)) {
      throw Error(ErrorCode::InvalidSchema, "invalid column name '" + c.name + "'");
    }
    if (!seen.insert(c.name).second) {
      throw Error(ErrorCode::InvalidSchema, "duplicate column name '" + c.name + "'");
    }
  }
  return schema;
}

TableSchema parse_schema_spec(std::string_view table, std::string_view spec) {
  TableSchema schema;
  schema.table_name = std::string(table);
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    std::string_view item = spec.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::InvalidSchema, "expected name:TYPE, got '" + std::string(item) + "'");
    }
    std::string_view type_text = item.substr(colon + 1);
    bool nullable = false;
    if (!type_text.empty() && type_text.back() == '?') {
      nullable = true;
      type_text.remove_suffix(1);
    }
    const auto type = parse_column_type(type_text);
    if (!type) throw Error(ErrorCode::InvalidSchema, "unknown type '" + std::string(type_text) + "'");
    schema.columns.push_back({std::string(item.substr(0, colon)), *type, nullable});
    pos = comma + 1;
  }
  return normalize_schema(std::move(schema));
}

std::uint64_t TableEntry::row_count() const {
  std::uint64_t total = 0;
  for (const auto& p : partitions) total += p.row_count;
  return total;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::floor<std::chrono::seconds>(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
  const std::chrono::sys_days day = std::chrono::floor<std::chrono::days>(secs);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{secs - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(ms));
  return buf;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "rename failed for " + path.string() + ": " + ec.message());
}

namespace {

json entry_to_json(const TableEntry& e) {
  json cols = json::array();
  for (const auto& c : e.schema.columns) {
    cols.push_back({{"name", c.name}, {"type", column_type_name(c.type)}, {"nullable", c.nullable}});
  }
  json parts = json::array();
  for (const auto& p : e.partitions) {
    parts.push_back({{"partition_id", p.partition_id},
                     {"worker_id", p.worker_id},
                     {"path", p.path},
                     {"format", storage_format_name(p.format)},
                     {"row_count", p.row_count}});
  }
  return {{"name", e.schema.table_name},
          {"format", storage_format_name(e.format)},
          {"created_at", e.created_at},
          {"columns", cols},
          {"partitions", parts}};
}

StorageFormat format_from_json(const json& j) {
  const auto f = parse_storage_format(j.get<std::string>());
  if (!f) throw Error(ErrorCode::IoFailure, "catalog: unknown format");
  return *f;
}

TableEntry entry_from_json(const json& j) {
  TableEntry e;
  e.schema.table_name = j.at("name").get<std::string>();
  e.format = format_from_json(j.at("format"));
  e.created_at = j.at("created_at").get<std::string>();
  for (const auto& c : j.at("columns")) {
    const auto type = parse_column_type(c.at("type").get<std::string>());
    if (!type) throw Error(ErrorCode::IoFailure, "catalog: unknown column type");
    e.schema.columns.push_back({c.at("name").get<std::string>(), *type, c.at("nullable").get<bool>()});
  }
  for (const auto& p : j.at("partitions")) {
    e.partitions.push_back({p.at("partition_id").get<std::uint32_t>(),
                            p.at("worker_id").get<std::uint32_t>(), p.at("path").get<std::string>(),
                            format_from_json(p.at("format")), p.at("row_count").get<std::uint64_t>()});
  }
  return e;
}

}  // namespace

Catalog::Catalog(fs::path data_root) : root_(std::move(data_root)) { reload(); }

void Catalog::reload() {
  std::unique_lock lock(mu_);
  tables_.clear();
  const fs::path path = catalog_path();
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  json doc;
  try {
    in >> doc;
    for (const auto& t : doc.at("tables")) {
      TableEntry e = entry_from_json(t);
      tables_.emplace(e.schema.table_name, std::move(e));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::IoFailure, "corrupt catalog " + path.string() + ": " + ex.what());
  }
}

void Catalog::persist_locked() const {
  json tables = json::array();
  for (const auto& [name, e] : tables_) tables.push_back(entry_to_json(e));
  json doc = {{"version", 1}, {"tables", tables}};
  write_file_atomic(catalog_path(), doc.dump(2) + "\n");
}

fs::path Catalog::table_dir(std::string_view table) const {
  return root_ / "tables" / to_lower(table);
}

TableEntry Catalog::create_table(TableSchema schema, StorageFormat format) {
  schema = normalize_schema(std::move(schema));
  std::unique_lock lock(mu_);
  if (tables_.count(schema.table_name)) {
    throw Error(ErrorCode::DuplicateTable, "table '" + schema.table_name + "' already exists");
  }
  TableEntry entry;
  entry.schema = std::move(schema);
  entry.format = format;
  entry.created_at = utc_timestamp_now();
  const std::string name = entry.schema.table_name;
  tables_.emplace(name, entry);
  try {
    persist_locked();
  } catch (...) {
    tables_.erase(name);
    throw;
  }
  return entry;
}

TableEntry Catalog::register_partition(std::string_view table, PartitionDescriptor desc) {
  std::unique_lock lock(mu_);
  auto it = tables_.find(to_lower(table));
  if (it == tables_.end()) throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(table) + "'");
  TableEntry& e = it->second;
  if (desc.partition_id != e.partitions.size()) {
    throw Error(ErrorCode::NonContiguousPartitionId,
                "partition id " + std::to_string(desc.partition_id) + " but table has " +
                    std::to_string(e.partitions.size()) + " partitions");
  }
  if (desc.format != e.format) {
    throw Error(ErrorCode::FormatMismatch, "table '" + e.schema.table_name + "' is " +
                                               std::string(storage_format_name(e.format)));
  }
  e.partitions.push_back(desc);
  try {
    persist_locked();
  } catch (...) {
    e.partitions.pop_back();
    throw;
  }
  return e;
}

TableEntry Catalog::get_table(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = tables_.find(to_lower(name));
  if (it == tables_.end()) throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(name) + "'");
  return it->second;
}

bool Catalog::has_table(std::string_view name) const {
  std::shared_lock lock(mu_);
  return tables_.count(to_lower(name)) > 0;
}

std::vector<std::string> Catalog::table_names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, e] : tables_) out.push_back(name);
  return out;
}

}  // namespace stripehouse
