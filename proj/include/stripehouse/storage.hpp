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
#include <functional>
#include <vector>

#include "stripehouse/batch.hpp"
#include "stripehouse/catalog.hpp"

namespace stripehouse {

struct ScanStats {
  std::uint64_t rows_read = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t stripes_total = 0;
  std::uint64_t stripes_pruned = 0;

  ScanStats& operator+=(const ScanStats& o) {
    rows_read += o.rows_read;
    bytes_read += o.bytes_read;
    stripes_total += o.stripes_total;
    stripes_pruned += o.stripes_pruned;
    return *this;
  }
};

/// Receives projected, filtered batches in file order.
using BatchSink = std::function<void(Batch&&)>;

inline constexpr std::size_t kDefaultBatchRows = 4096;

/// Checks arity, value types and nullability. Throws Error(TypeMismatch).
void check_row(const Row& row, const TableSchema& schema);

/// Column types of `projection` within `schema`.
std::vector<ColumnType> projected_types(const TableSchema& schema,
                                        const std::vector<std::size_t>& projection);

}  // namespace stripehouse
