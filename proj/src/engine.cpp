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

#include "stripehouse/engine.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "stripehouse/error.hpp"
#include "stripehouse/rowtext.hpp"
#include "stripehouse/stripe.hpp"

namespace stripehouse {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  return fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

namespace {

std::uint64_t hash_u64(std::uint64_t v) {
  std::uint8_t le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return fnv1a64(std::span<const std::uint8_t>(le, 8));
}

std::uint64_t double_bits(double d) {
  if (d == 0.0) d = 0.0;  // -0.0 and 0.0 join
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  return bits;
}

}  // namespace

std::optional<std::uint32_t> shuffle_bucket(const ColumnVector& key, std::size_t i, std::uint32_t reducers) {
  if (key.is_null(i)) return std::nullopt;
  std::uint64_t h = 0;
  switch (key.type) {
    case ColumnType::Int64:
    case ColumnType::Date: h = hash_u64(static_cast<std::uint64_t>(key.ints[i])); break;
    case ColumnType::Float64:
      if (std::isnan(key.floats[i])) return std::nullopt;
      h = hash_u64(double_bits(key.floats[i]));
      break;
    case ColumnType::String: h = fnv1a64(key.strings[i]); break;
  }
  return static_cast<std::uint32_t>(h % reducers);
}

namespace {

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Executor pool: E*C threads; run() is a stage with a barrier at the end.

class ExecutorPool {
 public:
  explicit ExecutorPool(std::uint32_t slots) {
    threads_.reserve(slots);
    for (std::uint32_t i = 0; i < slots; ++i) threads_.emplace_back([this] { worker(); });
  }

  ~ExecutorPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(std::size_t tasks, const std::function<void(std::size_t)>& fn) {
    if (tasks == 0) return;
    auto gen = std::make_shared<Generation>();
    gen->fn = &fn;
    gen->tasks = tasks;
    {
      std::lock_guard lock(mu_);
      current_ = gen;
      ++generation_;
    }
    wake_.notify_all();
    {
      std::unique_lock lock(gen->mu);
      gen->done_cv.wait(lock, [&] { return gen->done == gen->tasks; });
    }
    {
      std::lock_guard lock(mu_);
      current_.reset();
    }
    if (gen->error) std::rethrow_exception(gen->error);
  }

 private:
  struct Generation {
    const std::function<void(std::size_t)>* fn = nullptr;
    std::size_t tasks = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::condition_variable done_cv;
    std::size_t done = 0;
    std::exception_ptr error;
  };

  void worker() {
    std::uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<Generation> gen;
      {
        std::unique_lock lock(mu_);
        wake_.wait(lock, [&] { return stop_ || (generation_ != seen && current_); });
        if (stop_) return;
        seen = generation_;
        gen = current_;
      }
      for (;;) {
        const std::size_t i = gen->next.fetch_add(1);
        if (i >= gen->tasks) break;
        if (!gen->failed.load()) {
          try {
            (*gen->fn)(i);
          } catch (...) {
            std::lock_guard lock(gen->mu);
            if (!gen->error) gen->error = std::current_exception();
            gen->failed = true;
          }
        }
        std::lock_guard lock(gen->mu);
        if (++gen->done == gen->tasks) gen->done_cv.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::shared_ptr<Generation> current_;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

// ---------------------------------------------------------------------------
// Aggregation

struct AggState {
  std::uint64_t rows = 0;      // COUNT(*)
  std::uint64_t non_null = 0;  // SUM / AVG
  double sum = 0;
  Value min;
  Value max;
  std::unordered_set<std::string> distinct;
};

using GroupStates = std::map<std::int64_t, std::vector<AggState>>;

struct Locator {
  std::size_t side = 0;  // scan input
  std::size_t slot = 0;  // column within that input's batches
};

std::string distinct_key(const ColumnVector& col, std::size_t i) {
  switch (col.type) {
    case ColumnType::Int64:
    case ColumnType::Date: {
      std::string k(8, '\0');
      std::memcpy(k.data(), &col.ints[i], 8);
      return k;
    }
    case ColumnType::Float64: {
      const double d = col.floats[i];
      const std::uint64_t bits = std::isnan(d) ? 0x7ff8000000000000ULL : double_bits(d);
      std::string k(8, '\0');
      std::memcpy(k.data(), &bits, 8);
      return k;
    }
    case ColumnType::String: return col.strings[i];
  }
  return {};
}

double as_double(const ColumnVector& col, std::size_t i) {
  return col.type == ColumnType::Float64 ? col.floats[i] : static_cast<double>(col.ints[i]);
}

class Aggregator {
 public:
  Aggregator(const ResolvedQuery& q, std::vector<Locator> args, std::optional<Locator> bucket,
             std::uint64_t budget)
      : q_(q), args_(std::move(args)), bucket_(bucket), budget_(budget) {}

  void add(const Batch* const* sides, const std::size_t* rows) {
    std::int64_t key = 0;
    if (bucket_) {
      const ColumnVector& col = sides[bucket_->side]->columns[bucket_->slot];
      const std::size_t r = rows[bucket_->side];
      if (col.is_null(r)) return;
      const auto idx = bucket_index(q_.bucket->edges, as_double(col, r));
      if (!idx) return;
      key = static_cast<std::int64_t>(*idx);
    }
    auto it = groups_.find(key);
    if (it == groups_.end()) it = groups_.emplace(key, std::vector<AggState>(q_.aggregates.size())).first;
    std::vector<AggState>& states = it->second;
    for (std::size_t a = 0; a < q_.aggregates.size(); ++a) {
      const ResolvedAggregate& agg = q_.aggregates[a];
      AggState& st = states[a];
      if (agg.kind == AggKind::CountStar) {
        ++st.rows;
        continue;
      }
      const ColumnVector& col = sides[args_[a].side]->columns[args_[a].slot];
      const std::size_t r = rows[args_[a].side];
      if (col.is_null(r)) continue;
      switch (agg.kind) {
        case AggKind::CountDistinct:
          if (st.distinct.insert(distinct_key(col, r)).second && ++distinct_total_ > budget_) {
            throw Error(ErrorCode::MemoryBudgetExceeded,
                        "distinct set exceeds " + std::to_string(budget_) + " rows per task");
          }
          break;
        case AggKind::Sum:
        case AggKind::Avg:
          ++st.non_null;
          st.sum += as_double(col, r);
          break;
        case AggKind::Min:
        case AggKind::Max: {
          if (col.type == ColumnType::Float64 && std::isnan(col.floats[r])) break;
          Value v = col.value(r);
          Value& cur = agg.kind == AggKind::Min ? st.min : st.max;
          if (is_null(cur)) {
            cur = std::move(v);
          } else {
            const auto c = compare_values(v, cur);
            if (agg.kind == AggKind::Min ? c < 0 : c > 0) cur = std::move(v);
          }
          break;
        }
        case AggKind::CountStar: break;
      }
    }
  }

  void add_batch(const Batch& batch) {
    const Batch* sides[1] = {&batch};
    std::size_t rows[1];
    for (std::size_t i = 0; i < batch.num_rows; ++i) {
      rows[0] = i;
      add(sides, rows);
    }
  }

  GroupStates take() { return std::move(groups_); }

 private:
  const ResolvedQuery& q_;
  std::vector<Locator> args_;
  std::optional<Locator> bucket_;
  std::uint64_t budget_;
  std::uint64_t distinct_total_ = 0;
  GroupStates groups_;
};

void merge_state(const ResolvedAggregate& agg, AggState& into, AggState&& from) {
  into.rows += from.rows;
  into.non_null += from.non_null;
  into.sum += from.sum;
  if (!is_null(from.min) && (is_null(into.min) || compare_values(from.min, into.min) < 0)) into.min = std::move(from.min);
  if (!is_null(from.max) && (is_null(into.max) || compare_values(from.max, into.max) > 0)) into.max = std::move(from.max);
  if (agg.kind == AggKind::CountDistinct) {
    if (into.distinct.empty()) {
      into.distinct = std::move(from.distinct);
    } else {
      into.distinct.merge(from.distinct);
    }
  }
}

std::uint64_t distinct_entries(const GroupStates& groups) {
  std::uint64_t n = 0;
  for (const auto& [k, states] : groups) {
    for (const auto& s : states) n += s.distinct.size();
  }
  return n;
}

Value finalize(const ResolvedAggregate& agg, const AggState& st) {
  switch (agg.kind) {
    case AggKind::CountStar: return Value{static_cast<std::int64_t>(st.rows)};
    case AggKind::CountDistinct: return Value{static_cast<std::int64_t>(st.distinct.size())};
    case AggKind::Sum: return st.non_null ? Value{st.sum} : Value{};
    case AggKind::Avg: return st.non_null ? Value{st.sum / static_cast<double>(st.non_null)} : Value{};
    case AggKind::Min: return st.min;
    case AggKind::Max: return st.max;
  }
  return Value{};
}

void emit_rows(const ResolvedQuery& q, const GroupStates& groups, ResultTable& out) {
  const auto emit = [&](std::int64_t key, const std::vector<AggState>& states) {
    Row row;
    for (const OutputColumn& col : q.outputs) {
      row.push_back(col.is_bucket ? Value{key} : finalize(q.aggregates[col.aggregate], states[col.aggregate]));
    }
    out.rows.push_back(std::move(row));
  };
  if (!q.bucket && groups.empty()) {
    emit(0, std::vector<AggState>(q.aggregates.size()));
    return;
  }
  for (const auto& [key, states] : groups) emit(key, states);
}

// ---------------------------------------------------------------------------
// Shuffle staging, partitioned by (input, bucket, producer) so producers
// never contend.

struct StagedChunk {
  Batch batch;
  std::filesystem::path spill;
  std::size_t rows = 0;
};

class ShuffleArea {
 public:
  ShuffleArea(std::size_t inputs, std::uint32_t reducers, std::size_t producers, std::uint64_t spill_after,
              std::filesystem::path spill_dir, std::string prefix)
      : reducers_(reducers), producers_(producers), spill_after_(spill_after), spill_dir_(std::move(spill_dir)),
        prefix_(std::move(prefix)), chunks_(inputs * reducers * producers),
        bucket_rows_(inputs * reducers) {}

  ~ShuffleArea() {
    std::error_code ec;
    for (const auto& c : chunks_) {
      if (!c.spill.empty()) std::filesystem::remove(c.spill, ec);
    }
  }

  void put(std::size_t input, std::uint32_t bucket, std::size_t producer, Batch&& batch) {
    StagedChunk& chunk = chunks_[index(input, bucket, producer)];
    chunk.rows = batch.num_rows;
    const std::uint64_t before = bucket_rows_[input * reducers_ + bucket].fetch_add(chunk.rows);
    if (before + chunk.rows > spill_after_) {
      std::error_code ec;
      std::filesystem::create_directories(spill_dir_, ec);
      chunk.spill = spill_dir_ / (prefix_ + "-i" + std::to_string(input) + "-b" + std::to_string(bucket) + "-p" +
                                  std::to_string(producer) + ".bin");
      const std::string bytes = serialize_batch(batch);
      std::ofstream out(chunk.spill, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(ErrorCode::IoFailure, "cannot write shuffle spill " + chunk.spill.string());
      spilled_rows_ += chunk.rows;
    } else {
      chunk.batch = std::move(batch);
    }
  }

  std::uint64_t bucket_rows(std::size_t input, std::uint32_t bucket) const {
    return bucket_rows_[input * reducers_ + bucket].load();
  }

  /// Chunks of one bucket in producer order; spilled chunks are read back.
  std::vector<Batch> take(std::size_t input, std::uint32_t bucket) {
    std::vector<Batch> out;
    for (std::size_t p = 0; p < producers_; ++p) {
      StagedChunk& chunk = chunks_[index(input, bucket, p)];
      if (chunk.rows == 0) continue;
      if (!chunk.spill.empty()) {
        std::ifstream in(chunk.spill, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!in && !in.eof()) throw Error(ErrorCode::IoFailure, "cannot read shuffle spill " + chunk.spill.string());
        out.push_back(deserialize_batch(bytes));
      } else {
        out.push_back(std::move(chunk.batch));
      }
    }
    return out;
  }

  std::uint64_t spilled_rows() const { return spilled_rows_.load(); }

 private:
  std::size_t index(std::size_t input, std::uint32_t bucket, std::size_t producer) const {
    return (input * reducers_ + bucket) * producers_ + producer;
  }

  std::uint32_t reducers_;
  std::size_t producers_;
  std::uint64_t spill_after_;
  std::filesystem::path spill_dir_;
  std::string prefix_;
  std::vector<StagedChunk> chunks_;
  std::vector<std::atomic<std::uint64_t>> bucket_rows_;
  std::atomic<std::uint64_t> spilled_rows_{0};
};

// ---------------------------------------------------------------------------
// Scan helpers

struct OpenScan {
  const TableScan* scan = nullptr;
  std::vector<std::unique_ptr<StripeReader>> readers;  // per file, stripe format only
};

OpenScan open_scan(const TableScan& scan) {
  OpenScan open;
  open.scan = &scan;
  for (const ScanFile& f : scan.files) {
    if (scan.format == StorageFormat::Stripe) {
      open.readers.push_back(std::make_unique<StripeReader>(f.path, *f.footer));
    } else {
      open.readers.push_back(nullptr);
    }
  }
  return open;
}

ScanStats run_scan_task(const OpenScan& open, const TableSchema& schema, std::size_t task_index,
                        std::size_t batch_rows, const BatchSink& sink) {
  const TableScan& scan = *open.scan;
  const ScanTask& task = scan.tasks[task_index];
  ScanStats stats;
  if (scan.format == StorageFormat::Stripe) {
    Batch b = open.readers[task.partition]->read_stripe(*task.stripe, scan.projection, scan.predicates, stats);
    if (b.num_rows > 0) sink(std::move(b));
  } else {
    stats = scan_rowtext(scan.files[task.partition].path, schema, scan.projection, scan.predicates, sink, batch_rows);
  }
  return stats;
}

std::vector<Locator> arg_locators(const ResolvedQuery& q, const ScanStage& scan) {
  std::vector<Locator> out;
  for (const auto& agg : q.aggregates) {
    if (agg.column) {
      out.push_back({agg.column->table, scan.inputs[agg.column->table].slot_of(agg.column->column)});
    } else {
      out.push_back({});
    }
  }
  return out;
}

std::optional<Locator> bucket_locator(const ResolvedQuery& q, const ScanStage& scan) {
  if (!q.bucket) return std::nullopt;
  const auto& c = q.bucket->column;
  return Locator{c.table, scan.inputs[c.table].slot_of(c.column)};
}

// ---------------------------------------------------------------------------
// Hash join over one reducer bucket.

template <typename Key>
class JoinTable {
 public:
  JoinTable(const Batch& build, std::size_t key_slot) {
    const ColumnVector& key = build.columns[key_slot];
    next_.assign(build.num_rows, kEnd);
    heads_.reserve(build.num_rows);
    // Insert in reverse so each chain lists rows in build order.
    for (std::size_t i = build.num_rows; i-- > 0;) {
      if (key.is_null(i)) continue;
      if constexpr (std::is_same_v<Key, std::uint64_t>) {
        if (key.type == ColumnType::Float64 && std::isnan(key.floats[i])) continue;
      }
      auto [it, inserted] = heads_.try_emplace(key_at(key, i), static_cast<std::uint32_t>(i));
      if (!inserted) {
        next_[i] = it->second;
        it->second = static_cast<std::uint32_t>(i);
      }
    }
  }

  template <typename F>
  void probe(const ColumnVector& key, std::size_t i, F&& on_match) const {
    if (key.is_null(i)) return;
    auto it = heads_.find(key_at(key, i));
    if (it == heads_.end()) return;
    for (std::uint32_t r = it->second; r != kEnd; r = next_[r]) on_match(r);
  }

 private:
  static constexpr std::uint32_t kEnd = 0xFFFFFFFFu;

  static Key key_at(const ColumnVector& col, std::size_t i) {
    if constexpr (std::is_same_v<Key, std::string>) {
      return col.strings[i];
    } else {
      return col.type == ColumnType::Float64 ? double_bits(col.floats[i]) : static_cast<std::uint64_t>(col.ints[i]);
    }
  }

  std::unordered_map<Key, std::uint32_t> heads_;
  std::vector<std::uint32_t> next_;
};

Batch concat(std::vector<Batch>&& chunks, const std::vector<ColumnType>& types) {
  if (chunks.size() == 1) return std::move(chunks[0]);
  Batch out(types);
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.num_rows;
  for (auto& col : out.columns) col.reserve(total);
  for (const auto& c : chunks) {
    for (std::size_t i = 0; i < c.num_rows; ++i) out.append_row_from(c, i);
  }
  return out;
}

std::vector<ColumnType> scan_output_types(const ResolvedQuery& q, const TableScan& scan) {
  return projected_types(q.tables[scan.table].entry.schema, scan.projection);
}

// ---------------------------------------------------------------------------
// Plan drivers

struct ExecState {
  const PhysicalPlan& plan;
  const ExecConfig& config;
  ExecutorPool& pool;
  QueryMetrics& metrics;
  const std::filesystem::path& spill_dir;
  std::string prefix;
};

void run_metadata_count(ExecState& st, const MetadataCountStage& stage, ResultTable& out) {
  const TableSchema& schema = st.plan.query.tables[stage.table].entry.schema;
  std::vector<std::uint64_t> rows(stage.files.size()), bytes(stage.files.size()), stripes(stage.files.size());
  st.pool.run(stage.files.size(), [&](std::size_t i) {
    const StripeFooter f = read_footer(stage.files[i], &schema);
    rows[i] = f.row_count;
    bytes[i] = f.bytes_read;
    stripes[i] = f.stripes.size();
  });
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    total += rows[i];
    st.metrics.bytes_read += bytes[i];
    st.metrics.stripes_total += stripes[i];
  }
  Row row;
  for (std::size_t c = 0; c < st.plan.query.outputs.size(); ++c) row.push_back(Value{static_cast<std::int64_t>(total)});
  out.rows.push_back(std::move(row));
}

void run_simple(ExecState& st, const ScanStage& scan_stage, ResultTable& out) {
  const ResolvedQuery& q = st.plan.query;
  const TableScan& scan = scan_stage.inputs[0];
  const TableSchema& schema = q.tables[scan.table].entry.schema;
  const OpenScan open = open_scan(scan);
  const auto args = arg_locators(q, scan_stage);
  const auto bucket = bucket_locator(q, scan_stage);
  const std::uint64_t budget = st.config.task_budget_rows();

  std::vector<GroupStates> partials(scan.tasks.size());
  std::vector<ScanStats> stats(scan.tasks.size());
  st.pool.run(scan.tasks.size(), [&](std::size_t t) {
    Aggregator agg(q, args, bucket, budget);
    stats[t] = run_scan_task(open, schema, t, st.config.batch_rows, [&](Batch&& b) { agg.add_batch(b); });
    partials[t] = agg.take();
  });

  GroupStates merged;
  st.pool.run(1, [&](std::size_t) {
    for (auto& part : partials) {
      st.metrics.peak_group_count = std::max<std::uint64_t>(st.metrics.peak_group_count, part.size());
      for (auto& [key, states] : part) {
        auto it = merged.find(key);
        if (it == merged.end()) {
          merged.emplace(key, std::move(states));
          continue;
        }
        for (std::size_t a = 0; a < states.size(); ++a) merge_state(q.aggregates[a], it->second[a], std::move(states[a]));
      }
      if (distinct_entries(merged) > budget) {
        throw Error(ErrorCode::MemoryBudgetExceeded, "distinct set exceeds " + std::to_string(budget) + " rows per task");
      }
    }
  });
  st.metrics.peak_group_count = std::max<std::uint64_t>(st.metrics.peak_group_count, merged.size());
  for (const auto& s : stats) {
    st.metrics.rows_read += s.rows_read;
    st.metrics.bytes_read += s.bytes_read;
  }
  emit_rows(q, merged, out);
}

template <typename Key>
GroupStates join_bucket(const ResolvedQuery& q, const JoinStage& join, const ShuffleStage& by_key,
                        const std::vector<Batch>& build_chunks, const std::vector<Batch>& probe_chunks,
                        const std::vector<ColumnType>& build_types, const std::vector<Locator>& args,
                        const std::optional<Locator>& bucket, std::uint64_t budget) {
  std::vector<Batch> owned(build_chunks.begin(), build_chunks.end());
  const Batch build = concat(std::move(owned), build_types);
  const std::size_t build_key = by_key.sides[join.build_input].second;
  const std::size_t probe_key = by_key.sides[join.probe_input].second;
  JoinTable<Key> table(build, build_key);
  Aggregator agg(q, args, bucket, budget);
  const Batch* sides[2];
  std::size_t rows[2];
  sides[join.build_input] = &build;
  for (const Batch& chunk : probe_chunks) {
    sides[join.probe_input] = &chunk;
    const ColumnVector& key = chunk.columns[probe_key];
    for (std::size_t i = 0; i < chunk.num_rows; ++i) {
      rows[join.probe_input] = i;
      table.probe(key, i, [&](std::uint32_t r) {
        rows[join.build_input] = r;
        agg.add(sides, rows);
      });
    }
  }
  return agg.take();
}

void run_join(ExecState& st, ResultTable& out) {
  const ResolvedQuery& q = st.plan.query;
  const auto& scan_stage = std::get<ScanStage>(st.plan.stages.at(0));
  const auto& by_key = std::get<ShuffleStage>(st.plan.stages.at(1));
  const auto& join = std::get<JoinStage>(st.plan.stages.at(2));
  const std::uint32_t reducers = by_key.reducers;
  const std::uint64_t budget = st.config.task_budget_rows();

  // Stage 1+2: scan both inputs, hash-partition each output batch by join key.
  std::vector<OpenScan> opens;
  std::vector<std::pair<std::size_t, std::size_t>> producers;  // (input, task)
  for (std::size_t in = 0; in < scan_stage.inputs.size(); ++in) {
    opens.push_back(open_scan(scan_stage.inputs[in]));
    for (std::size_t t = 0; t < scan_stage.inputs[in].tasks.size(); ++t) producers.emplace_back(in, t);
  }
  ShuffleArea area(scan_stage.inputs.size(), reducers, producers.size(), st.config.executor_mem_rows, st.spill_dir,
                   st.prefix);
  std::vector<ScanStats> stats(producers.size());
  std::vector<std::uint64_t> staged(producers.size(), 0);
  st.pool.run(producers.size(), [&](std::size_t p) {
    const auto [in, task] = producers[p];
    const TableScan& scan = scan_stage.inputs[in];
    const std::size_t key_slot = by_key.sides[in].second;
    const auto types = scan_output_types(q, scan);
    std::vector<Batch> parts(reducers, Batch(types));
    stats[p] = run_scan_task(opens[in], q.tables[scan.table].entry.schema, task, st.config.batch_rows,
                             [&](Batch&& b) {
                               const ColumnVector& key = b.columns[key_slot];
                               for (std::size_t i = 0; i < b.num_rows; ++i) {
                                 const auto bucket = shuffle_bucket(key, i, reducers);
                                 if (bucket) parts[*bucket].append_row_from(b, i);
                               }
                             });
    for (std::uint32_t r = 0; r < reducers; ++r) {
      staged[p] += parts[r].num_rows;
      if (parts[r].num_rows > 0) area.put(in, r, p, std::move(parts[r]));
    }
  });
  for (std::size_t p = 0; p < producers.size(); ++p) {
    st.metrics.rows_read += stats[p].rows_read;
    st.metrics.bytes_read += stats[p].bytes_read;
    st.metrics.shuffle_rows += staged[p];
  }

  for (std::uint32_t r = 0; r < reducers; ++r) {
    const std::uint64_t build_rows = area.bucket_rows(join.build_input, r);
    if (build_rows > budget) {
      throw Error(ErrorCode::MemoryBudgetExceeded, "join build side of reducer " + std::to_string(r) + " holds " +
                                                       std::to_string(build_rows) + " rows, budget " +
                                                       std::to_string(budget));
    }
  }

  // Stage 3+4: hash join per reducer, fused with partial aggregation, then
  // stage 5: route partial states by group key.
  const auto args = arg_locators(q, scan_stage);
  const auto bucket = bucket_locator(q, scan_stage);
  const auto build_types = scan_output_types(q, scan_stage.inputs[join.build_input]);
  const bool string_key = q.join->first.type == ColumnType::String;
  std::vector<std::vector<GroupStates>> routed(reducers, std::vector<GroupStates>(reducers));
  std::vector<std::uint64_t> partial_groups(reducers, 0);
  st.pool.run(reducers, [&](std::size_t b) {
    const auto bucket_id = static_cast<std::uint32_t>(b);
    const std::vector<Batch> build_chunks = area.take(join.build_input, bucket_id);
    const std::vector<Batch> probe_chunks = area.take(join.probe_input, bucket_id);
    GroupStates partial =
        string_key ? join_bucket<std::string>(q, join, by_key, build_chunks, probe_chunks, build_types, args, bucket, budget)
                   : join_bucket<std::uint64_t>(q, join, by_key, build_chunks, probe_chunks, build_types, args, bucket,
                                                budget);
    partial_groups[b] = partial.size();
    for (auto& [key, states] : partial) {
      const auto target = static_cast<std::size_t>(hash_u64(static_cast<std::uint64_t>(key)) % reducers);
      routed[target][b].emplace(key, std::move(states));
    }
  });
  for (std::uint32_t b = 0; b < reducers; ++b) {
    st.metrics.shuffle_rows += partial_groups[b];
    st.metrics.peak_group_count = std::max(st.metrics.peak_group_count, partial_groups[b]);
  }

  // Stage 6: final merge per reducer, producers in order.
  std::vector<GroupStates> finals(reducers);
  st.pool.run(reducers, [&](std::size_t r) {
    GroupStates merged;
    for (std::uint32_t p = 0; p < reducers; ++p) {
      for (auto& [key, states] : routed[r][p]) {
        auto it = merged.find(key);
        if (it == merged.end()) {
          merged.emplace(key, std::move(states));
          continue;
        }
        for (std::size_t a = 0; a < states.size(); ++a) merge_state(q.aggregates[a], it->second[a], std::move(states[a]));
      }
    }
    if (distinct_entries(merged) > budget) {
      throw Error(ErrorCode::MemoryBudgetExceeded, "distinct set exceeds " + std::to_string(budget) + " rows per task");
    }
    finals[r] = std::move(merged);
  });

  GroupStates all;
  for (auto& f : finals) {
    st.metrics.peak_group_count = std::max<std::uint64_t>(st.metrics.peak_group_count, f.size());
    for (auto& [key, states] : f) {
      if (!all.emplace(key, std::move(states)).second) {
        throw Error(ErrorCode::Internal, "group key " + std::to_string(key) + " reached two reducers");
      }
    }
  }
  st.metrics.spilled_rows = area.spilled_rows();
  emit_rows(q, all, out);
}

}  // namespace

ResultTable empty_result(const ResolvedQuery& query) {
  ResultTable t;
  for (const auto& o : query.outputs) {
    t.columns.push_back(o.name);
    t.types.push_back(o.type);
  }
  return t;
}

Engine::Engine(std::filesystem::path spill_dir) : spill_dir_(std::move(spill_dir)) {}

QueryResult Engine::execute(const PhysicalPlan& plan, const ExecConfig& config) {
  std::lock_guard busy(busy_);
  config.validate();
  const auto start = Clock::now();
  QueryResult result;
  result.table = empty_result(plan.query);
  result.cost = estimate_cost(plan, config);
  QueryMetrics& m = result.metrics;
  m.stripes_total = plan.stripes_total();
  m.stripes_pruned = plan.stripes_pruned();
  if (const auto* scan = plan.scan_stage()) {
    for (const auto& in : scan->inputs) m.bytes_read += in.footer_bytes;
  }
  try {
    ExecutorPool pool(config.slots());
    ExecState st{plan, config, pool, m, spill_dir_,
                 "q" + std::to_string(::getpid()) + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) +
                     "-" + std::to_string(next_query_++)};
    if (plan.is_metadata_count()) {
      run_metadata_count(st, std::get<MetadataCountStage>(plan.stages[0]), result.table);
    } else if (plan.is_join()) {
      run_join(st, result.table);
    } else {
      run_simple(st, std::get<ScanStage>(plan.stages.at(0)), result.table);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Internal, std::string("query aborted: ") + e.what());
  }
  m.response_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

QueryResult run_query(std::string_view sql, const Catalog& catalog, const ExecConfig& config, Engine& engine) {
  const auto start = Clock::now();
  const ResolvedQuery q = validate(parse(sql), catalog);
  const PhysicalPlan p = plan(q, catalog, config);
  QueryResult r = engine.execute(p, config);
  r.metrics.response_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

bool results_match(const ResultTable& a, const ResultTable& b, double rel_tol, std::string* why) {
  const auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.columns != b.columns) return fail("column names differ");
  if (a.rows.size() != b.rows.size()) {
    return fail("row counts differ: " + std::to_string(a.rows.size()) + " vs " + std::to_string(b.rows.size()));
  }
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    if (a.rows[r].size() != b.rows[r].size()) return fail("row " + std::to_string(r) + " arity differs");
    for (std::size_t c = 0; c < a.rows[r].size(); ++c) {
      const Value& x = a.rows[r][c];
      const Value& y = b.rows[r][c];
      const auto* dx = std::get_if<double>(&x);
      const auto* dy = std::get_if<double>(&y);
      bool same;
      if (dx && dy) {
        const double scale = std::max(std::fabs(*dx), std::fabs(*dy));
        same = values_equal(x, y) || std::fabs(*dx - *dy) <= rel_tol * scale;
      } else {
        same = values_equal(x, y);
      }
      if (!same) {
        const ColumnType t = c < a.types.size() ? a.types[c] : ColumnType::Float64;
        return fail("row " + std::to_string(r) + " column " + a.columns[c] + ": " + display_value(x, t) + " vs " +
                    display_value(y, t));
      }
    }
  }
  return true;
}

std::string format_result(const ResultTable& table) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width(table.columns.size(), 0);
  for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
  for (const Row& row : table.rows) {
    std::vector<std::string> line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line.push_back(display_value(row[c], table.types[c]));
      width[c] = std::max(width[c], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  std::ostringstream os;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << table.columns[c];
  }
  os << "\n";
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << line[c];
    }
    os << "\n";
  }
  return os.str();
}

std::string format_metrics(const QueryMetrics& m) {
  std::ostringstream os;
  os << "response_time_s=" << std::fixed << std::setprecision(6) << m.response_time_s << " rows_read=" << m.rows_read
     << " bytes_read=" << m.bytes_read << " stripes_total=" << m.stripes_total
     << " stripes_pruned=" << m.stripes_pruned << " shuffle_rows=" << m.shuffle_rows
     << " peak_group_count=" << m.peak_group_count << " spilled_rows=" << m.spilled_rows;
  return os.str();
}

}  // namespace stripehouse
