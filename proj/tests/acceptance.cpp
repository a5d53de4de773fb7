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


// End-to-end acceptance run. Prints one PASS / FAIL / SKIP line per
// criterion and exits nonzero if any criterion fails.
//
// usage: acceptance [work_dir]   (default: a fresh temp dir, removed after)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "random_query.hpp"
#include "service_scenario.hpp"
#include "storage_props.hpp"
#include "stripehouse/bench.hpp"
#include "stripehouse/oracle.hpp"
#include "test_util.hpp"

namespace sh = stripehouse;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool files_equal(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::vector<char> ba(1 << 20), bb(1 << 20);
  for (;;) {
    fa.read(ba.data(), static_cast<std::streamsize>(ba.size()));
    fb.read(bb.data(), static_cast<std::streamsize>(bb.size()));
    if (fa.gcount() != fb.gcount()) return false;
    if (!std::equal(ba.begin(), ba.begin() + fa.gcount(), bb.begin())) return false;
    if (fa.gcount() == 0) return true;
  }
}

const sh::BenchRow* find_row(const std::vector<sh::BenchRow>& rows, const std::string& scenario, sh::StorageFormat f,
                             std::uint64_t n, std::uint32_t e) {
  for (const auto& r : rows) {
    if (r.scenario == scenario && r.format == f && r.n_rows == n && r.executors == e) return &r;
  }
  return nullptr;
}

constexpr std::uint64_t kLargest = 10'000'000;

struct BenchRuns {
  sh::BenchPlan plan;
  std::vector<sh::BenchRow> a, b;
  fs::path work_a, work_b;
};

Outcome criterion1(const BenchRuns& runs) {
  const auto* rt = find_row(runs.a, "simple", sh::StorageFormat::RowText, kLargest, runs.plan.fixed_executors);
  const auto* st = find_row(runs.a, "simple", sh::StorageFormat::Stripe, kLargest, runs.plan.fixed_executors);
  if (!rt || !st) return {Verdict::Fail, "missing bench cells at 10^7"};
  const double t = st->median_response_s / rt->median_response_s;
  const double b = static_cast<double>(st->bytes_read) / static_cast<double>(rt->bytes_read);
  return {t <= 0.2 && b <= 0.01 ? Verdict::Pass : Verdict::Fail,
          fmt("time ratio %.5f (<= 0.2), bytes ratio %.7f (<= 0.01)", t, b) +
              fmt(", stripe %.4fs rowtext %.4fs", st->median_response_s, rt->median_response_s)};
}

Outcome criterion2(const BenchRuns& runs) {
  const auto* rt = find_row(runs.a, "complex", sh::StorageFormat::RowText, kLargest, runs.plan.fixed_executors);
  const auto* st = find_row(runs.a, "complex", sh::StorageFormat::Stripe, kLargest, runs.plan.fixed_executors);
  if (!rt || !st) return {Verdict::Fail, "missing bench cells at 10^7"};
  const sh::Catalog catalog(runs.work_a / ("n" + std::to_string(kLargest)) / "stripe");
  const sh::PhysicalPlan p =
      sh::plan(sh::validate(sh::parse(sh::complex_query(kLargest)), catalog), catalog, sh::ExecConfig{});
  const double pruned = static_cast<double>(p.stripes_pruned()) / static_cast<double>(p.stripes_total());
  const double t = st->median_response_s / rt->median_response_s;
  return {t <= 0.8 && pruned >= 0.5 ? Verdict::Pass : Verdict::Fail,
          fmt("time ratio %.4f (<= 0.8), pruned %.0f", t, static_cast<double>(p.stripes_pruned())) +
              fmt("/%.0f = %.4f (>= 0.5)", static_cast<double>(p.stripes_total()), pruned)};
}

// Fraction of `attempts` in which `ok` held, as "k/n".
std::pair<int, int> attempts(int n, const std::function<bool()>& ok) {
  int k = 0;
  for (int i = 0; i < n; ++i) k += ok();
  return {k, n};
}

Outcome criterion3(const BenchRuns& runs) {
  std::string detail;
  bool fail = false;
  // (a) cost model argmin over the sweep for the complex plan at 10^7.
  {
    const sh::Catalog catalog(runs.work_a / ("n" + std::to_string(kLargest)) / "stripe");
    const sh::PhysicalPlan p =
        sh::plan(sh::validate(sh::parse(sh::complex_query(kLargest)), catalog), catalog, sh::ExecConfig{});
    std::uint32_t best = 0;
    double best_cost = 0;
    std::string costs;
    for (std::uint32_t e : {1u, 2u, 4u, 8u, 16u, 32u}) {
      sh::ExecConfig c;
      c.executors = e;
      const double total = sh::estimate_cost(p, c).total;
      costs += " E" + std::to_string(e) + "=" + fmt("%.3f", total);
      if (best == 0 || total < best_cost) {
        best = e;
        best_cost = total;
      }
    }
    const bool interior = best != 1 && best != 32;
    fail |= !interior;
    detail += std::string("(a) ") + (interior ? "PASS" : "FAIL") + " argmin E=" + std::to_string(best) + ";" + costs;
  }
  // (b) wall clock.
  const unsigned cores = std::thread::hardware_concurrency();
  const auto time_at = [&](const sh::Catalog& catalog, const std::string& sql, std::uint32_t e) {
    sh::ExecConfig c;
    c.executors = e;
    c.cores_per_executor = runs.plan.cores;
    return sh::measure(sql, catalog, c, 5).median_s;
  };
  if (cores >= 4) {
    const sh::Catalog catalog(runs.work_a / ("n" + std::to_string(kLargest)) / "stripe");
    const std::string sql = sh::complex_query(kLargest);
    const auto [k, n] = attempts(3, [&] { return time_at(catalog, sql, 4) <= 0.7 * time_at(catalog, sql, 1); });
    fail |= k < 2;
    detail += "; (b) large E=4 vs E=1 " + std::string(k >= 2 ? "PASS " : "FAIL ") + std::to_string(k) + "/" +
              std::to_string(n);
  } else {
    detail += "; (b) large E=4 vs E=1 SKIP (" + std::to_string(cores) + " core(s), needs >= 4)";
  }
  {
    const sh::BenchDataset ds = sh::prepare_dataset(runs.work_a / "n10000", 10'000, runs.plan.seed);
    const sh::Catalog catalog(ds.stripe_root);
    const std::string sql = sh::complex_query(10'000);
    const auto [k, n] = attempts(3, [&] { return time_at(catalog, sql, 8) >= 0.8 * time_at(catalog, sql, 1); });
    fail |= k < 2;
    detail += "; small-data E=8 vs E=1 " + std::string(k >= 2 ? "PASS " : "FAIL ") + std::to_string(k) + "/" +
              std::to_string(n);
  }
  return {fail ? Verdict::Fail : Verdict::Pass, detail};
}

Outcome criterion4(const fs::path& work) {
  const sh::GenSpec spec;  // seed 42, 10^5 lab rows
  const fs::path csv = work / "c4" / "csv";
  std::map<sh::StorageFormat, fs::path> roots{{sh::StorageFormat::Stripe, work / "c4" / "stripe"},
                                              {sh::StorageFormat::RowText, work / "c4" / "rowtext"}};
  for (const auto& [f, root] : roots) sh::testing::load_generated(spec, csv, root, f);
  const sh::Catalog stripe(roots[sh::StorageFormat::Stripe]);
  const sh::Catalog rowtext(roots[sh::StorageFormat::RowText]);
  sh::testing::RandomQuery gen(42, spec);
  sh::Engine engine(work / "c4" / "spill");
  int mismatches = 0, runs = 0;
  std::string first;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) {
    const std::string sql = gen.next();
    const sh::ResolvedQuery q = sh::validate(sh::parse(sql), stripe);
    std::vector<std::vector<sh::Row>> tables;
    for (const auto& t : q.tables) tables.push_back(sh::read_all_rows(t.entry, stripe));
    const sh::ResultTable want = sh::brute_force(q, tables);
    for (const sh::Catalog* catalog : {&stripe, &rowtext}) {
      for (std::uint32_t e : {1u, 2u, 4u, 8u}) {
        for (bool prune : {true, false}) {
          sh::ExecConfig c;
          c.executors = e;
          c.prune = prune;
          std::string why;
          ++runs;
          if (!sh::results_match(sh::run_query(sql, *catalog, c, engine).table, want, 1e-9, &why)) {
            if (mismatches++ == 0) first = sql + " E=" + std::to_string(e) + ": " + why;
          }
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mismatches == 0 && secs < 300 ? Verdict::Pass : Verdict::Fail,
          std::to_string(runs) + " executions of 200 queries, " + std::to_string(mismatches) + " mismatches" +
              fmt(", %.1fs (< 300s)", secs) + (first.empty() ? "" : "; first: " + first)};
}

Outcome criterion5(const fs::path& work) {
  const auto rep = sh::testing::run_stripe_properties(20260101, 1000, work / "c5");
  return {rep.failures == 0 && rep.files >= 1000 ? Verdict::Pass : Verdict::Fail,
          std::to_string(rep.files) + " files, " + std::to_string(rep.checks) + " checks, " +
              std::to_string(rep.failures) + " failures" + (rep.first_failure.empty() ? "" : "; first: " + rep.first_failure)};
}

Outcome criterion6(const fs::path& work) {
  std::vector<std::string> failures;
  const std::string frame = sh::encode_frame(R"({"type":"ping"})");
  if (frame != std::string("\x00\x00\x00\x0f", 4) + R"({"type":"ping"})") failures.push_back("ping golden bytes");
  if (sh::authorize("u", {"encounter"}, {})) failures.push_back("default deny");
  std::vector<sh::AccessRule> rules = {{"u", "*", "SELECT", sh::Effect::Allow},
                                       {"u", "encounter", "SELECT", sh::Effect::Allow},
                                       {"u", "encounter", "SELECT", sh::Effect::Deny},
                                       {"u", "lab_procedure", "SELECT", sh::Effect::Allow},
                                       {"v", "encounter", "SELECT", sh::Effect::Allow}};
  std::mt19937_64 rng(6);
  int bad_perms = 0;
  for (int i = 0; i < 100; ++i) {
    std::shuffle(rules.begin(), rules.end(), rng);
    bad_perms += sh::authorize("u", {"encounter"}, rules) || !sh::authorize("u", {"lab_procedure"}, rules) ||
                 !sh::authorize("v", {"encounter"}, rules);
  }
  if (bad_perms) failures.push_back("deny-overrides varies with rule order in " + std::to_string(bad_perms) + "/100");
  for (auto& f : sh::testing::run_service_scenario(work / "c6")) failures.push_back(std::move(f));
  std::string detail = "frame golden bytes, default deny, 100 rule shuffles, end-to-end session and audit checks";
  if (!failures.empty()) {
    detail = std::to_string(failures.size()) + " failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty() ? Verdict::Pass : Verdict::Fail, detail};
}

std::vector<std::string> non_timing(const fs::path& csv) {
  std::vector<std::string> out;
  std::ifstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!out.empty() && cells.size() > 4) cells[4].clear();  // median_response_s
    std::string joined;
    for (const auto& c : cells) joined += c + ",";
    out.push_back(joined);
  }
  return out;
}

Outcome criterion7(const BenchRuns& runs) {
  std::vector<std::string> diffs;
  for (std::uint64_t n : runs.plan.sizes) {
    for (const char* f : {"encounter.csv", "lab_procedure.csv"}) {
      const fs::path rel = fs::path("n" + std::to_string(n)) / "csv" / f;
      if (!files_equal(runs.work_a / rel, runs.work_b / rel)) diffs.push_back(rel.string());
    }
  }
  const auto a = non_timing(runs.plan.out_dir / "a" / "bench.csv");
  const auto b = non_timing(runs.plan.out_dir / "b" / "bench.csv");
  if (a != b || a.size() < 2) diffs.push_back("bench.csv non-timing columns");
  return {diffs.empty() ? Verdict::Pass : Verdict::Fail,
          diffs.empty() ? std::to_string(runs.plan.sizes.size() * 2) + " generated CSVs byte-identical, " +
                              std::to_string(a.size() - 1) + " bench rows identical outside median_response_s"
                        : "differs: " + diffs.front()};
}

}  // namespace

int main(int argc, char** argv) {
  std::unique_ptr<sh::testing::TempDir> tmp;
  fs::path work;
  if (argc > 1) {
    work = argv[1];
    fs::create_directories(work);
  } else {
    tmp = std::make_unique<sh::testing::TempDir>();
    work = tmp->path();
  }

  int failed = 0;
  const auto report = [&](int n, const std::function<Outcome()>& run) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* v = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    failed += o.verdict == Verdict::Fail;
    std::cout << "criterion " << n << ": " << v << " - " << o.detail << fmt(" [%.1fs]", secs) << std::endl;
  };

  // Two complete bench runs with the same seed, each generating its own data.
  BenchRuns runs;
  runs.plan.out_dir = work / "bench";
  runs.work_a = work / "bench-work-a";
  runs.work_b = work / "bench-work-b";
  bool bench_ok = true;
  std::string bench_error;
  const auto bench_start = std::chrono::steady_clock::now();
  try {
    sh::BenchPlan a = runs.plan;
    a.out_dir = runs.plan.out_dir / "a";
    a.work_dir = runs.work_a;
    runs.a = sh::run_bench(a);
    sh::BenchPlan b = runs.plan;
    b.out_dir = runs.plan.out_dir / "b";
    b.work_dir = runs.work_b;
    runs.b = sh::run_bench(b);
  } catch (const std::exception& e) {
    bench_ok = false;
    bench_error = e.what();
  }
  std::cout << "bench: two full runs in "
            << fmt("%.1fs", std::chrono::duration<double>(std::chrono::steady_clock::now() - bench_start).count())
            << std::endl;
  const auto needs_bench = [&](const std::function<Outcome(const BenchRuns&)>& f) {
    return [&, f] { return bench_ok ? f(runs) : Outcome{Verdict::Fail, "bench failed: " + bench_error}; };
  };

  report(1, needs_bench(criterion1));
  report(2, needs_bench(criterion2));
  report(3, needs_bench(criterion3));
  report(4, [&] { return criterion4(work); });
  report(5, [&] { return criterion5(work); });
  report(6, [&] { return criterion6(work); });
  report(7, needs_bench(criterion7));
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
