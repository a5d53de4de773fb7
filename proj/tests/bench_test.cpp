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


#include <sstream>

#include <gtest/gtest.h>

#include "stripehouse/bench.hpp"
#include "test_util.hpp"

namespace stripehouse {
namespace {

using testing::TempDir;

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(testing::slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    out.push_back(std::move(cells));
  }
  return out;
}

TEST(Bench, CsvHeaderAndLine) {
  EXPECT_EQ(kBenchCsvHeader,
            "scenario,format,n_rows,executors,median_response_s,rows_read,bytes_read,stripes_pruned,cost_estimate");
  BenchRow r{"complex", StorageFormat::RowText, 100000, 8, 0.0123456789, 100000, 4567, 0, 42.5};
  EXPECT_EQ(bench_csv_line(r), "complex,rowtext,100000,8,0.012346,100000,4567,0,42.500000");
}

TEST(Bench, DatasetShape) {
  const GenSpec s = bench_gen_spec(1'000'000, 7);
  EXPECT_EQ(s.n_labs, 1'000'000u);
  EXPECT_EQ(s.n_encounters, 100'000u);
  EXPECT_EQ(s.n_patients, 10'000u);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_NE(complex_query(100'000).find("l.lab_id < 40000"), std::string::npos);
}

TEST(Bench, PlanValidation) {
  BenchPlan p;
  p.sizes.clear();
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.repeats = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Bench, SvgHasAxesAndSeries) {
  const std::string svg = render_svg("T <1>", "Number of records", "Response time (s)",
                                     {{"rowtext", {{1e5, 0.5}, {1e6, 2.0}}}, {"stripe", {{1e5, 0.1}, {1e6, 0.2}}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("T &lt;1&gt;"), std::string::npos);
  EXPECT_NE(svg.find("Number of records"), std::string::npos);
  EXPECT_NE(svg.find("Response time (s)"), std::string::npos);
  EXPECT_NE(svg.find("rowtext"), std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t at = 0; (at = svg.find("<polyline", at)) != std::string::npos; ++at) ++polylines;
  EXPECT_EQ(polylines, 2u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Bench, SmallRunIsCompleteAndDeterministic) {
  TempDir dir;
  BenchPlan plan;
  plan.sizes = {10'000, 20'000};
  plan.sweep = {1, 2};
  plan.repeats = 1;
  plan.cores = 1;
  std::vector<std::vector<std::vector<std::string>>> runs;
  for (const char* name : {"a", "b"}) {
    plan.out_dir = dir / name;
    const auto rows = run_bench(plan);
    EXPECT_EQ(rows.size(), 2u * 2u * 2u + 2u * 2u);
    runs.push_back(read_csv(plan.out_dir / "bench.csv"));
    for (const char* svg : {"scenario1.svg", "scenario2.svg", "scenario3.svg"}) {
      EXPECT_NE(testing::slurp(plan.out_dir / svg).find("<polyline"), std::string::npos) << svg;
    }
    for (const auto& r : rows) {
      if (r.scenario == "simple" && r.format == StorageFormat::Stripe) EXPECT_EQ(r.rows_read, 0u);
      if (r.scenario == "simple" && r.format == StorageFormat::RowText) EXPECT_EQ(r.rows_read, r.n_rows);
      // 20k rows make two stripes; the lab_id bound rules out the second.
      if (r.scenario == "complex" && r.format == StorageFormat::Stripe && r.n_rows == 20'000) {
        EXPECT_EQ(r.stripes_pruned, 1u);
      }
      if (r.scenario.starts_with("executors")) EXPECT_EQ(r.format, StorageFormat::Stripe);
    }
  }
  EXPECT_EQ(testing::slurp(dir / "a" / "work" / "n20000" / "csv" / "lab_procedure.csv"),
            testing::slurp(dir / "b" / "work" / "n20000" / "csv" / "lab_procedure.csv"));
  ASSERT_EQ(runs[0].size(), runs[1].size());
  EXPECT_EQ(runs[0][0].size(), 9u);
  for (std::size_t i = 0; i < runs[0].size(); ++i) {
    ASSERT_EQ(runs[0][i].size(), 9u);
    auto a = runs[0][i], b = runs[1][i];
    if (i > 0) a[4] = b[4] = "";
    EXPECT_EQ(a, b) << "line " << i;
  }
}

}  // namespace
}  // namespace stripehouse
