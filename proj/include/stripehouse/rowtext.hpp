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
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/predicate.hpp"
#include "stripehouse/storage.hpp"

// Row-text block files (.rtx): one record per line, fields separated by '|',
// null written as an empty field, no header. No index of any kind, so every
// scan reads the whole file.

namespace stripehouse {

/// Streaming writer. Output is byte-deterministic for identical input.
class RowTextWriter {
 public:
  RowTextWriter(const std::filesystem::path& path, TableSchema schema);

  /// Throws IllegalCharacter for STRING values containing '|' or '\n' (or
  /// empty, which would read back as NULL) and TypeMismatch for rows that do
  /// not fit the schema.
  void append(const Row& row);
  std::uint64_t finish();
  std::uint64_t rows_written() const { return rows_; }

 private:
  std::filesystem::path path_;
  TableSchema schema_;
  std::ofstream out_;
  std::string line_;
  std::uint64_t rows_ = 0;
  bool finished_ = false;
};

/// Descriptor path is `path` as given; partition and worker ids are zero.
PartitionDescriptor write_rowtext(std::span<const Row> rows, const TableSchema& schema,
                                  const std::filesystem::path& path);

/// Full scan. `rows_read` is always the file's record count. Throws
/// MalformedRecord (with the 1-based line number) on the first bad record.
ScanStats scan_rowtext(const std::filesystem::path& path, const TableSchema& schema,
                       const std::vector<std::size_t>& projection,
                       std::span<const ColumnPredicate> predicates, const BatchSink& sink,
                       std::size_t batch_rows = kDefaultBatchRows);

}  // namespace stripehouse
