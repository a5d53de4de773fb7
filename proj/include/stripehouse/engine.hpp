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
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stripehouse/batch.hpp"
#include "stripehouse/catalog.hpp"
#include "stripehouse/planner.hpp"
#include "stripehouse/query.hpp"

namespace stripehouse {

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<ColumnType> types;
  std::vector<Row> rows;  // ascending by category index when grouped
};

struct QueryMetrics {
  double response_time_s = 0;
  std::uint64_t rows_read = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t stripes_total = 0;
  std::uint64_t stripes_pruned = 0;
  std::uint64_t shuffle_rows = 0;
  std::uint64_t peak_group_count = 0;
  std::uint64_t spilled_rows = 0;
};

struct QueryResult {
  ResultTable table;
  QueryMetrics metrics;
  CostEstimate cost;
};

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view bytes);

/// Shuffle bucket of row `i` of `key`: fnv1a64 over the key bytes (INT64/DATE
/// and FLOAT64 as 8 little-endian bytes, STRING as UTF-8) mod `reducers`.
/// Returns nullopt for NULL keys (and NaN), which never join.
std::optional<std::uint32_t> shuffle_bucket(const ColumnVector& key, std::size_t i, std::uint32_t reducers);

/// Runs physical plans on E executors with C slots each (E*C worker threads
/// created per query). One query at a time per engine; engines are
/// independent.
class Engine {
 public:
  /// Shuffle buckets that grow past the executor row budget spill to
  /// `spill_dir`.
  explicit Engine(std::filesystem::path spill_dir);

  /// Throws MemoryBudgetExceeded, IoFailure, or Internal for broken
  /// invariants; never terminates the process.
  QueryResult execute(const PhysicalPlan& plan, const ExecConfig& config);

 private:
  std::filesystem::path spill_dir_;
  std::mutex busy_;
  std::uint64_t next_query_ = 0;
};

/// parse -> validate -> plan -> execute; response_time_s covers all of it.
QueryResult run_query(std::string_view sql, const Catalog& catalog, const ExecConfig& config, Engine& engine);

/// Output column names and types for a resolved query.
ResultTable empty_result(const ResolvedQuery& query);

/// Exact equality for integer/string/date cells, relative tolerance for
/// FLOAT64 cells. On mismatch, `why` describes the first difference.
bool results_match(const ResultTable& a, const ResultTable& b, double rel_tol, std::string* why = nullptr);

/// Aligned text table.
std::string format_result(const ResultTable& table);
std::string format_metrics(const QueryMetrics& m);

}  // namespace stripehouse
