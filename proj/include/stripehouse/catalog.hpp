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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "stripehouse/types.hpp"

namespace stripehouse {

enum class StorageFormat : std::uint8_t { RowText, Stripe };

std::string_view storage_format_name(StorageFormat f);  // "rowtext" / "stripe"
std::optional<StorageFormat> parse_storage_format(std::string_view text);
std::string_view storage_extension(StorageFormat f);  // ".rtx" / ".stp"

struct ColumnDef {
  std::string name;
  ColumnType type = ColumnType::Int64;
  bool nullable = true;

  bool operator==(const ColumnDef&) const = default;
};

struct TableSchema {
  std::string table_name;
  std::vector<ColumnDef> columns;

  /// Index of `name` (case-insensitive), or nullopt.
  std::optional<std::size_t> find_column(std::string_view name) const;
  std::vector<ColumnType> types() const;

  bool operator==(const TableSchema&) const = default;
};

/// Lowercases identifiers and checks the schema invariants. Throws
/// Error(InvalidSchema).
TableSchema normalize_schema(TableSchema schema);

/// Parses "name:TYPE[?],..." where a trailing '?' marks the column nullable.
TableSchema parse_schema_spec(std::string_view table, std::string_view spec);

bool is_identifier(std::string_view lowered);

struct PartitionDescriptor {
  std::uint32_t partition_id = 0;
  std::uint32_t worker_id = 0;
  std::string path;  // relative to the data root
  StorageFormat format = StorageFormat::Stripe;
  std::uint64_t row_count = 0;

  bool operator==(const PartitionDescriptor&) const = default;
};

struct TableEntry {
  TableSchema schema;
  StorageFormat format = StorageFormat::Stripe;
  std::vector<PartitionDescriptor> partitions;
  std::string created_at;  // RFC-3339 UTC

  std::uint64_t row_count() const;

  bool operator==(const TableEntry&) const = default;
};

/// Number of logical workers partitions are placed on.
inline constexpr std::uint32_t kDefaultWorkers = 8;
inline constexpr std::uint32_t kDefaultPartitions = 8;

std::string utc_timestamp_now();

/// Table metadata persisted as <data_root>/catalog.json. Mutations are
/// serialized and written with write-temp-then-rename; readers receive
/// snapshot copies.
class Catalog {
 public:
  explicit Catalog(std::filesystem::path data_root);

  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  TableEntry create_table(TableSchema schema, StorageFormat format);
  TableEntry register_partition(std::string_view table, PartitionDescriptor desc);
  TableEntry get_table(std::string_view name) const;
  bool has_table(std::string_view name) const;
  std::vector<std::string> table_names() const;

  const std::filesystem::path& data_root() const { return root_; }
  std::filesystem::path catalog_path() const { return root_ / "catalog.json"; }
  std::filesystem::path table_dir(std::string_view table) const;
  std::filesystem::path resolve(const PartitionDescriptor& p) const { return root_ / p.path; }

  /// Re-reads catalog.json, replacing the in-memory state.
  void reload();

 private:
  void persist_locked() const;

  std::filesystem::path root_;
  mutable std::shared_mutex mu_;
  std::map<std::string, TableEntry> tables_;
};

/// Writes `contents` to `path` atomically (temp file in the same directory,
/// then rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace stripehouse
