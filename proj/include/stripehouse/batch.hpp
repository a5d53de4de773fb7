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
#include <string>
#include <string_view>
#include <vector>

#include "stripehouse/types.hpp"

namespace stripehouse {

/// One typed column of a row batch. Only the vector matching `type` is
/// populated; null slots hold a zero/empty placeholder.
struct ColumnVector {
  ColumnType type = ColumnType::Int64;
  std::vector<std::int64_t> ints;  // INT64 and DATE
  std::vector<double> floats;
  std::vector<std::string> strings;
  std::vector<std::uint8_t> nulls;  // 1 = null

  ColumnVector() = default;
  explicit ColumnVector(ColumnType t) : type(t) {}

  std::size_t size() const { return nulls.size(); }
  bool is_null(std::size_t i) const { return nulls[i] != 0; }
  void reserve(std::size_t n);

  void append(const Value& v);
  void append_null();
  void append_from(const ColumnVector& other, std::size_t i);
  Value value(std::size_t i) const;
};

struct Batch {
  std::vector<ColumnVector> columns;
  std::size_t num_rows = 0;

  Batch() = default;
  explicit Batch(const std::vector<ColumnType>& types);

  void append_row(const Row& row);
  /// Copies row `i` of `other` (same column layout).
  void append_row_from(const Batch& other, std::size_t i);
  Row row(std::size_t i) const;
  std::vector<Row> rows() const;
};

/// Plain column chunk: u8 encoding (0) | u32 row_count | null bitmap
/// (LSB first) | values. Shared by stripe files and shuffle spill files.
void encode_column(const ColumnVector& col, std::string& out);
/// Throws Error(CorruptFooter) on any inconsistency.
ColumnVector decode_column(std::string_view bytes, ColumnType type, std::uint32_t rows);

std::string serialize_batch(const Batch& batch);
Batch deserialize_batch(std::string_view bytes);

}  // namespace stripehouse
