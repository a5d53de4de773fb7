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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/query.hpp"
#include "stripehouse/stripe.hpp"

namespace stripehouse {

/// Cost-model constants, in dimensionless units.
struct CostConstants {
  double startup = 5.0;       // per executor
  double per_row = 1e-6;      // per row processed in the slowest task of a wave
  double per_shuffle_row = 5e-6;
  double coordination = 1.0;  // per executor per stage

  CostConstants scaled(double k) const {
    return {startup * k, per_row * k, per_shuffle_row * k, coordination * k};
  }
};

struct ExecConfig {
  std::uint32_t executors = 8;
  std::uint32_t cores_per_executor = 3;
  /// Row budget per executor, shared by its cores.
  std::uint64_t executor_mem_rows = 1ULL << 22;
  bool prune = true;
  std::size_t batch_rows = kDefaultBatchRows;
  CostConstants cost;

  std::uint32_t slots() const { return executors * cores_per_executor; }
  std::uint32_t reducers() const { return slots(); }
  /// Rows one task may hold resident (build side, distinct sets).
  std::uint64_t task_budget_rows() const;
  /// Throws Error(InvalidSchema) if any of E, B, C is zero.
  void validate() const;
};

/// One unit of scan work: a whole row-text partition or one stripe.
struct ScanTask {
  std::size_t partition = 0;                // index into TableScan::files
  std::optional<std::size_t> stripe;        // set for stripe files
  std::uint64_t rows = 0;

  bool operator==(const ScanTask&) const = default;
};

struct ScanFile {
  std::filesystem::path path;
  std::shared_ptr<const StripeFooter> footer;  // stripe files only

  bool operator==(const ScanFile& o) const { return path == o.path; }
};

struct TableScan {
  std::size_t table = 0;  // index into ResolvedQuery::tables
  std::string table_name;
  StorageFormat format = StorageFormat::Stripe;
  std::vector<ScanFile> files;
  std::vector<ScanTask> tasks;
  std::vector<ColumnPredicate> predicates;
  std::vector<std::size_t> projection;  // table column indices, ascending
  std::uint64_t stripes_total = 0;
  std::uint64_t stripes_pruned = 0;
  std::uint64_t footer_bytes = 0;

  /// Position of table column `column` in the scan output.
  std::size_t slot_of(std::size_t column) const;
  std::uint64_t task_rows() const;
  std::uint64_t max_task_rows() const;

  bool operator==(const TableScan&) const = default;
};

struct ScanStage {
  std::vector<TableScan> inputs;
};

struct ShuffleStage {
  enum class Key { JoinKey, GroupKey } key = Key::JoinKey;
  /// For JoinKey: (input, key slot) per side. Empty for GroupKey.
  std::vector<std::pair<std::size_t, std::size_t>> sides;
  std::uint32_t reducers = 1;
};

struct JoinStage {
  std::size_t build_input = 0;  // index into ScanStage::inputs
  std::size_t probe_input = 1;
};

struct AggStage {
  bool final = false;
  std::uint32_t tasks = 1;
};

/// COUNT(*) answered from stripe footers alone.
struct MetadataCountStage {
  std::size_t table = 0;
  std::string table_name;
  std::vector<std::filesystem::path> files;
};

using Stage = std::variant<ScanStage, ShuffleStage, JoinStage, AggStage, MetadataCountStage>;

std::string stage_name(const Stage& stage);

struct PhysicalPlan {
  ResolvedQuery query;
  std::vector<Stage> stages;
  std::uint32_t reducers = 1;
  bool prune = true;

  bool is_join() const { return query.join.has_value(); }
  bool is_metadata_count() const;
  const ScanStage* scan_stage() const;
  std::uint64_t stripes_total() const;
  std::uint64_t stripes_pruned() const;
};

/// Lowers a validated query. Stripe footers are read here so that scan tasks
/// are individual stripes that survive pruning.
PhysicalPlan plan(const ResolvedQuery& query, const Catalog& catalog, const ExecConfig& config);

/// Drops stripe tasks whose statistics refute the scan's predicates and
/// updates stripes_pruned. The footers are those of `scan.files`.
TableScan prune_tasks(const TableScan& scan);

struct CostEstimate {
  double startup = 0;
  double compute = 0;
  double shuffle = 0;
  double coordination = 0;
  double total = 0;
};

/// startup = s*E; compute = sum over stages of ceil(tasks/(E*C)) *
/// max_task_rows * c_row; shuffle = shuffle_rows * c_net; coordination =
/// x*E*stages. Row counts come from retained tasks (pre-filter), so the
/// estimate is deterministic.
CostEstimate estimate_cost(const PhysicalPlan& plan, const ExecConfig& config);

/// Shape of one stage as seen by the cost model.
struct StageLoad {
  std::uint64_t tasks = 0;
  std::uint64_t max_task_rows = 0;
};

/// Closed-form cost over explicit stage loads; estimate_cost reduces a plan
/// to this.
CostEstimate cost_formula(std::span<const StageLoad> stages, std::uint64_t shuffle_rows,
                          std::uint32_t executors, std::uint32_t cores, const CostConstants& k);

/// Stage list, pruning counts and a cost table over `sweep`.
std::string explain(const PhysicalPlan& plan, const ExecConfig& config,
                    std::span<const std::uint32_t> sweep);

}  // namespace stripehouse
