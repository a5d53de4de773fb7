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

#include "stripehouse/planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "stripehouse/error.hpp"

namespace stripehouse {

std::uint64_t ExecConfig::task_budget_rows() const {
  return std::max<std::uint64_t>(1, executor_mem_rows / std::max<std::uint32_t>(1, cores_per_executor));
}

void ExecConfig::validate() const {
  if (executors == 0) throw Error(ErrorCode::InvalidSchema, "executors must be >= 1");
  if (cores_per_executor == 0) throw Error(ErrorCode::InvalidSchema, "cores_per_executor must be >= 1");
  if (executor_mem_rows == 0) throw Error(ErrorCode::InvalidSchema, "executor_mem_rows must be >= 1");
  if (batch_rows == 0) throw Error(ErrorCode::InvalidSchema, "batch_rows must be >= 1");
}

std::size_t TableScan::slot_of(std::size_t column) const {
  const auto it = std::lower_bound(projection.begin(), projection.end(), column);
  if (it == projection.end() || *it != column) throw Error(ErrorCode::Internal, "column not projected");
  return static_cast<std::size_t>(it - projection.begin());
}

std::uint64_t TableScan::task_rows() const {
  std::uint64_t n = 0;
  for (const auto& t : tasks) n += t.rows;
  return n;
}

std::uint64_t TableScan::max_task_rows() const {
  std::uint64_t m = 0;
  for (const auto& t : tasks) m = std::max(m, t.rows);
  return m;
}

std::string stage_name(const Stage& stage) {
  struct {
    std::string operator()(const ScanStage& s) const {
      return s.inputs.size() > 1 ? "Scan x" + std::to_string(s.inputs.size()) : "Scan";
    }
    std::string operator()(const ShuffleStage& s) const {
      return s.key == ShuffleStage::Key::JoinKey ? "Shuffle(join key) x" + std::to_string(s.sides.size())
                                                 : "Shuffle(group key)";
    }
    std::string operator()(const JoinStage&) const { return "HashJoin"; }
    std::string operator()(const AggStage& a) const { return a.final ? "Agg(final)" : "Agg(partial)"; }
    std::string operator()(const MetadataCountStage&) const { return "MetadataCount"; }
  } visitor;
  return std::visit(visitor, stage);
}

bool PhysicalPlan::is_metadata_count() const {
  return stages.size() == 1 && std::holds_alternative<MetadataCountStage>(stages[0]);
}

const ScanStage* PhysicalPlan::scan_stage() const {
  for (const auto& s : stages) {
    if (const auto* scan = std::get_if<ScanStage>(&s)) return scan;
  }
  return nullptr;
}

std::uint64_t PhysicalPlan::stripes_total() const {
  std::uint64_t n = 0;
  if (const auto* s = scan_stage()) {
    for (const auto& in : s->inputs) n += in.stripes_total;
  }
  return n;
}

std::uint64_t PhysicalPlan::stripes_pruned() const {
  std::uint64_t n = 0;
  if (const auto* s = scan_stage()) {
    for (const auto& in : s->inputs) n += in.stripes_pruned;
  }
  return n;
}

TableScan prune_tasks(const TableScan& scan) {
  TableScan out = scan;
  if (scan.format != StorageFormat::Stripe || scan.predicates.empty()) return out;
  out.tasks.clear();
  for (const ScanTask& task : scan.tasks) {
    const auto& footer = scan.files.at(task.partition).footer;
    if (!footer || !task.stripe) throw Error(ErrorCode::Internal, "stripe task without footer");
    if (stripe_refuted(footer->stripes.at(*task.stripe), scan.predicates)) {
      ++out.stripes_pruned;
    } else {
      out.tasks.push_back(task);
    }
  }
  return out;
}

namespace {

bool only_count_star(const ResolvedQuery& q) {
  if (q.aggregates.empty() || q.bucket) return false;
  return std::all_of(q.aggregates.begin(), q.aggregates.end(),
                     [](const ResolvedAggregate& a) { return a.kind == AggKind::CountStar; });
}

std::vector<std::size_t> projection_for(const ResolvedQuery& q, std::size_t table) {
  std::set<std::size_t> cols;
  if (q.join) cols.insert(table == 0 ? q.join->first.column : q.join->second.column);
  for (const auto& a : q.aggregates) {
    if (a.column && a.column->table == table) cols.insert(a.column->column);
  }
  if (q.bucket && q.bucket->column.table == table) cols.insert(q.bucket->column.column);
  return {cols.begin(), cols.end()};
}

TableScan make_scan(const ResolvedQuery& q, std::size_t table, const Catalog& catalog, bool prune) {
  const ResolvedTable& t = q.tables[table];
  TableScan scan;
  scan.table = table;
  scan.table_name = t.entry.schema.table_name;
  scan.format = t.entry.format;
  scan.predicates = t.predicates;
  scan.projection = projection_for(q, table);
  for (std::size_t p = 0; p < t.entry.partitions.size(); ++p) {
    const PartitionDescriptor& desc = t.entry.partitions[p];
    ScanFile file;
    file.path = catalog.resolve(desc);
    if (scan.format == StorageFormat::Stripe) {
      auto footer = std::make_shared<StripeFooter>(read_footer(file.path, &t.entry.schema));
      scan.footer_bytes += footer->bytes_read;
      scan.stripes_total += footer->stripes.size();
      for (std::size_t s = 0; s < footer->stripes.size(); ++s) {
        scan.tasks.push_back({p, s, footer->stripes[s].row_count});
      }
      file.footer = std::move(footer);
    } else {
      scan.tasks.push_back({p, std::nullopt, desc.row_count});
    }
    scan.files.push_back(std::move(file));
  }
  return prune ? prune_tasks(scan) : scan;
}

}  // namespace

PhysicalPlan plan(const ResolvedQuery& query, const Catalog& catalog, const ExecConfig& config) {
  config.validate();
  PhysicalPlan p;
  p.query = query;
  p.prune = config.prune;
  p.reducers = config.reducers();

  const ResolvedTable& first = query.tables.at(0);
  if (!query.join && first.entry.format == StorageFormat::Stripe && first.predicates.empty() &&
      only_count_star(query)) {
    MetadataCountStage m;
    m.table = 0;
    m.table_name = first.entry.schema.table_name;
    for (const auto& desc : first.entry.partitions) m.files.push_back(catalog.resolve(desc));
    p.stages.emplace_back(std::move(m));
    return p;
  }

  ScanStage scan;
  scan.inputs.push_back(make_scan(query, 0, catalog, config.prune));
  if (!query.join) {
    p.stages.emplace_back(std::move(scan));
    p.stages.emplace_back(AggStage{false, static_cast<std::uint32_t>(0)});
    p.stages.emplace_back(AggStage{true, 1});
    std::get<AggStage>(p.stages[1]).tasks =
        static_cast<std::uint32_t>(std::get<ScanStage>(p.stages[0]).inputs[0].tasks.size());
    return p;
  }

  scan.inputs.push_back(make_scan(query, 1, catalog, config.prune));
  const std::uint64_t rows0 = query.tables[0].entry.row_count();
  const std::uint64_t rows1 = query.tables[1].entry.row_count();
  JoinStage join;
  join.build_input = rows0 < rows1 ? 0 : 1;
  join.probe_input = 1 - join.build_input;

  ShuffleStage by_key;
  by_key.key = ShuffleStage::Key::JoinKey;
  by_key.reducers = p.reducers;
  by_key.sides.emplace_back(0, scan.inputs[0].slot_of(query.join->first.column));
  by_key.sides.emplace_back(1, scan.inputs[1].slot_of(query.join->second.column));

  ShuffleStage by_group;
  by_group.key = ShuffleStage::Key::GroupKey;
  by_group.reducers = p.reducers;

  p.stages.emplace_back(std::move(scan));
  p.stages.emplace_back(std::move(by_key));
  p.stages.emplace_back(join);
  p.stages.emplace_back(AggStage{false, p.reducers});
  p.stages.emplace_back(std::move(by_group));
  p.stages.emplace_back(AggStage{true, p.reducers});
  return p;
}

CostEstimate cost_formula(std::span<const StageLoad> stages, std::uint64_t shuffle_rows,
                          std::uint32_t executors, std::uint32_t cores, const CostConstants& k) {
  CostEstimate c;
  const double e = executors;
  const std::uint64_t slots = std::uint64_t{executors} * cores;
  c.startup = k.startup * e;
  for (const StageLoad& s : stages) {
    const std::uint64_t waves = (s.tasks + slots - 1) / slots;
    c.compute += static_cast<double>(waves) * static_cast<double>(s.max_task_rows) * k.per_row;
  }
  c.shuffle = static_cast<double>(shuffle_rows) * k.per_shuffle_row;
  c.coordination = k.coordination * e * static_cast<double>(stages.size());
  c.total = c.startup + c.compute + c.shuffle + c.coordination;
  return c;
}

CostEstimate estimate_cost(const PhysicalPlan& plan, const ExecConfig& config) {
  const std::uint64_t reducers = config.reducers();
  const auto ceil_div = [](std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; };
  std::uint64_t groups = 1;
  if (plan.query.bucket) groups = plan.query.bucket->edges.size() - 1;

  std::vector<StageLoad> loads;
  std::uint64_t shuffle_rows = 0;
  const ScanStage* scan = plan.scan_stage();
  std::uint64_t scan_tasks = 0;
  std::uint64_t scan_max = 0;
  if (scan) {
    for (const auto& in : scan->inputs) {
      scan_tasks += in.tasks.size();
      scan_max = std::max(scan_max, in.max_task_rows());
    }
  }
  const JoinStage* join = nullptr;
  for (const auto& s : plan.stages) {
    if (const auto* j = std::get_if<JoinStage>(&s)) join = j;
  }
  std::uint64_t build_rows = 0, probe_rows = 0;
  if (join) {
    build_rows = scan->inputs[join->build_input].task_rows();
    probe_rows = scan->inputs[join->probe_input].task_rows();
  }

  for (const auto& stage : plan.stages) {
    StageLoad load;
    if (const auto* m = std::get_if<MetadataCountStage>(&stage)) {
      load.tasks = m->files.size();
    } else if (std::holds_alternative<ScanStage>(stage)) {
      load = {scan_tasks, scan_max};
    } else if (const auto* sh = std::get_if<ShuffleStage>(&stage)) {
      shuffle_rows += sh->key == ShuffleStage::Key::JoinKey ? build_rows + probe_rows : reducers * groups;
    } else if (std::holds_alternative<JoinStage>(stage)) {
      load = {reducers, ceil_div(build_rows + probe_rows, reducers)};
    } else if (const auto* agg = std::get_if<AggStage>(&stage)) {
      if (join) {
        load = agg->final ? StageLoad{reducers, groups} : StageLoad{reducers, ceil_div(probe_rows, reducers)};
      } else {
        load = agg->final ? StageLoad{1, scan_tasks * groups} : StageLoad{scan_tasks, scan_max};
      }
    }
    loads.push_back(load);
  }
  return cost_formula(loads, shuffle_rows, config.executors, config.cores_per_executor, config.cost);
}

std::string explain(const PhysicalPlan& plan, const ExecConfig& config, std::span<const std::uint32_t> sweep) {
  std::ostringstream os;
  os << "stages " << plan.stages.size() << "\n";
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const Stage& stage = plan.stages[i];
    os << "  " << i << ": " << stage_name(stage);
    if (const auto* scan = std::get_if<ScanStage>(&stage)) {
      for (const auto& in : scan->inputs) {
        os << "\n       " << in.table_name << " [" << storage_format_name(in.format) << "] tasks=" << in.tasks.size()
           << " rows=" << in.task_rows() << " predicates=" << in.predicates.size();
        if (in.format == StorageFormat::Stripe) {
          os << " stripes=" << in.stripes_total << " pruned=" << in.stripes_pruned;
        }
      }
    } else if (const auto* m = std::get_if<MetadataCountStage>(&stage)) {
      os << " " << m->table_name << " files=" << m->files.size();
    } else if (const auto* sh = std::get_if<ShuffleStage>(&stage)) {
      os << " reducers=" << sh->reducers;
    } else if (const auto* j = std::get_if<JoinStage>(&stage)) {
      const auto* scan_stage = plan.scan_stage();
      os << " build=" << scan_stage->inputs[j->build_input].table_name
         << " probe=" << scan_stage->inputs[j->probe_input].table_name;
    } else if (const auto* a = std::get_if<AggStage>(&stage)) {
      os << " tasks=" << a->tasks;
    }
    os << "\n";
  }
  os << "stripes total=" << plan.stripes_total() << " pruned=" << plan.stripes_pruned() << "\n";
  os << "cost (C=" << config.cores_per_executor << ")\n";
  os << "  " << std::setw(9) << "executors" << std::setw(12) << "startup" << std::setw(12) << "compute"
     << std::setw(12) << "shuffle" << std::setw(12) << "coord" << std::setw(12) << "total" << "\n";
  os << std::fixed << std::setprecision(4);
  for (std::uint32_t e : sweep) {
    ExecConfig c = config;
    c.executors = e;
    const CostEstimate est = estimate_cost(plan, c);
    os << "  " << std::setw(9) << e << std::setw(12) << est.startup << std::setw(12) << est.compute << std::setw(12)
       << est.shuffle << std::setw(12) << est.coordination << std::setw(12) << est.total << "\n";
  }
  return os.str();
}

}  // namespace stripehouse
