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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/datagen.hpp"
#include "stripehouse/engine.hpp"
#include "stripehouse/planner.hpp"

namespace stripehouse {

inline constexpr std::string_view kSimpleQuery = "SELECT COUNT(*) FROM lab_procedure";

/// The join/categorize/distribution query. The lab_id bound keeps the scan
/// to the first 40% of lab rows so that stripe statistics can skip the rest;
/// lab_code alone is uniform over every stripe and never prunes.
std::string complex_query(std::uint64_t n_labs);

inline constexpr std::string_view kBenchCsvHeader =
    "scenario,format,n_rows,executors,median_response_s,rows_read,bytes_read,stripes_pruned,cost_estimate";

struct BenchPlan {
  bool simple = true;
  bool complex = true;
  bool executors = true;
  std::vector<std::uint64_t> sizes{100'000, 300'000, 1'000'000, 3'000'000, 10'000'000};
  std::vector<StorageFormat> formats{StorageFormat::RowText, StorageFormat::Stripe};
  std::vector<std::uint32_t> sweep{1, 2, 4, 8, 16, 32};
  std::uint32_t fixed_executors = 8;
  std::uint32_t cores = 3;
  std::uint32_t repeats = 3;
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "bench-out";
  /// Scratch space for generated CSVs and ingested tables; defaults to
  /// out_dir/work.
  std::filesystem::path work_dir;

  void validate() const;
};

struct BenchRow {
  std::string scenario;
  StorageFormat format = StorageFormat::Stripe;
  std::uint64_t n_rows = 0;
  std::uint32_t executors = 0;
  double median_response_s = 0;
  std::uint64_t rows_read = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t stripes_pruned = 0;
  double cost_estimate = 0;
};

std::string bench_csv_line(const BenchRow& row);

/// Generated CSVs for one size, ingested once per format into its own data
/// root (tables `encounter` and `lab_procedure`).
struct BenchDataset {
  std::uint64_t n_labs = 0;
  std::filesystem::path csv_dir;
  std::filesystem::path rowtext_root;
  std::filesystem::path stripe_root;

  const std::filesystem::path& root(StorageFormat f) const {
    return f == StorageFormat::RowText ? rowtext_root : stripe_root;
  }
};

/// Encounters are n/10 and patients n/100 of the lab rows.
GenSpec bench_gen_spec(std::uint64_t n_labs, std::uint64_t seed);

/// Generates and ingests unless a completed dataset already sits in `dir`.
BenchDataset prepare_dataset(const std::filesystem::path& dir, std::uint64_t n_labs, std::uint64_t seed);

struct Measurement {
  double median_s = 0;
  QueryResult last;
};

/// One discarded warm-up run, then the median of `repeats` timed runs.
Measurement measure(std::string_view sql, const Catalog& catalog, const ExecConfig& config, std::uint32_t repeats);

/// Runs the selected scenarios, appending to out_dir/bench.csv as cells
/// finish and writing scenario1.svg..scenario3.svg at the end.
std::vector<BenchRow> run_bench(const BenchPlan& plan, std::ostream* log = nullptr);

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), x > 0
};

/// Line chart with a log-scale x axis.
std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgSeries>& series);

}  // namespace stripehouse
