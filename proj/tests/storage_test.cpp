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


#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "stripehouse/datagen.hpp"
#include "stripehouse/rowtext.hpp"
#include "stripehouse/stripe.hpp"
#include "storage_props.hpp"
#include "test_util.hpp"

namespace stripehouse {
namespace {

using testing::code_of;
using testing::slurp;
using testing::spit;
using testing::TempDir;

std::vector<std::size_t> all_columns(const TableSchema& s) {
  std::vector<std::size_t> v(s.columns.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

std::vector<Row> collect_rowtext(const std::filesystem::path& p, const TableSchema& s,
                                 std::vector<ColumnPredicate> preds = {}, ScanStats* stats = nullptr) {
  std::vector<Row> out;
  const ScanStats st = scan_rowtext(p, s, all_columns(s), preds, [&](Batch&& b) {
    for (std::size_t i = 0; i < b.num_rows; ++i) out.push_back(b.row(i));
  });
  if (stats) *stats = st;
  return out;
}

std::vector<Row> collect_stripes(const std::filesystem::path& p, const TableSchema& s,
                                 std::vector<ColumnPredicate> preds = {}, bool prune = true,
                                 ScanStats* stats = nullptr, std::vector<std::size_t> projection = {}) {
  std::vector<Row> out;
  if (projection.empty()) projection = all_columns(s);
  const ScanStats st = scan_stripes(p, s, projection, preds, prune, [&](Batch&& b) {
    for (std::size_t i = 0; i < b.num_rows; ++i) out.push_back(b.row(i));
  });
  if (stats) *stats = st;
  return out;
}

const TableSchema kMixed{"m", {{"i", ColumnType::Int64, false}, {"s", ColumnType::String}, {"f", ColumnType::Float64}}};

// ---- row text ----

TEST(RowText, EmptyFile) {
  TempDir dir;
  const auto d = write_rowtext({}, kMixed, dir / "e.rtx");
  EXPECT_EQ(d.row_count, 0u);
  EXPECT_EQ(std::filesystem::file_size(dir / "e.rtx"), 0u);
  EXPECT_TRUE(collect_rowtext(dir / "e.rtx", kMixed).empty());
}

TEST(RowText, LineEncoding) {
  TempDir dir;
  const std::vector<Row> rows{{Value{std::int64_t{1}}, Value{std::string("a")}, Value{}}};
  write_rowtext(rows, kMixed, dir / "a.rtx");
  EXPECT_EQ(slurp(dir / "a.rtx"), "1|a|\n");
}

TEST(RowText, FloatAndDateText) {
  TempDir dir;
  const TableSchema s{"d", {{"f", ColumnType::Float64}, {"d", ColumnType::Date}}};
  write_rowtext(std::vector<Row>{{Value{0.1}, Value{parse_date("2018-12-31")}}, {Value{1e300}, Value{std::int64_t{0}}}},
                s, dir / "d.rtx");
  EXPECT_EQ(slurp(dir / "d.rtx"), "0.1|2018-12-31\n1e+300|1970-01-01\n");
}

TEST(RowText, RejectsDelimiters) {
  TempDir dir;
  const TableSchema s{"t", {{"s", ColumnType::String}}};
  EXPECT_EQ(code_of([&] { write_rowtext(std::vector<Row>{{Value{std::string("x|y")}}}, s, dir / "x.rtx"); }),
            ErrorCode::IllegalCharacter);
  EXPECT_EQ(code_of([&] { write_rowtext(std::vector<Row>{{Value{std::string("x\ny")}}}, s, dir / "y.rtx"); }),
            ErrorCode::IllegalCharacter);
}

TEST(RowText, RejectsWrongTypes) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { write_rowtext(std::vector<Row>{{Value{1.5}, Value{}, Value{}}}, kMixed, dir / "t.rtx"); }),
            ErrorCode::TypeMismatch);
  EXPECT_EQ(code_of([&] { write_rowtext(std::vector<Row>{{Value{}, Value{}, Value{}}}, kMixed, dir / "n.rtx"); }),
            ErrorCode::TypeMismatch);
}

TEST(RowText, PredicateFiltersButReadsEverything) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}}};
  write_rowtext(std::vector<Row>{{Value{std::int64_t{5}}}, {Value{std::int64_t{15}}}}, s, dir / "x.rtx");
  ScanStats st;
  const auto rows = collect_rowtext(dir / "x.rtx", s, {{0, CompareOp::Gt, Value{std::int64_t{10}}}}, &st);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(std::get<std::int64_t>(rows[0][0]), 15);
  EXPECT_EQ(st.rows_read, 2u);
  collect_rowtext(dir / "x.rtx", s, {{0, CompareOp::Gt, Value{std::int64_t{100}}}}, &st);
  EXPECT_EQ(st.rows_read, 2u);
}

TEST(RowText, MalformedRecordsReportLine) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}, {"y", ColumnType::Int64}}};
  spit(dir / "bad.rtx", "1|2\n3\n");
  try {
    collect_rowtext(dir / "bad.rtx", s);
    FAIL() << "expected MalformedRecord";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  spit(dir / "bad2.rtx", "1|zz\n");
  EXPECT_EQ(code_of([&] { collect_rowtext(dir / "bad2.rtx", s); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([&] { collect_rowtext(dir / "missing.rtx", s); }), ErrorCode::IoFailure);
}

TEST(RowText, GeneratedRoundTrip) {
  TempDir dir;
  GenSpec spec;
  std::vector<Row> labs;
  generate_rows(spec, [](const Row&) {}, [&](const Row& r) { labs.push_back(r); });
  const TableSchema s = lab_procedure_schema();
  write_rowtext(labs, s, dir / "lab.rtx");
  EXPECT_TRUE(testing::rows_equal(labs, collect_rowtext(dir / "lab.rtx", s)));

  // Filtered scan equals an in-memory filter of the generator output.
  const std::vector<ColumnPredicate> preds{{2, CompareOp::Eq, Value{std::string("LC03")}},
                                           {3, CompareOp::Ge, Value{100.0}}};
  std::vector<Row> want;
  for (const Row& r : labs) {
    if (std::get<std::string>(r[2]) == "LC03" && !is_null(r[3]) && std::get<double>(r[3]) >= 100.0) want.push_back(r);
  }
  ScanStats st;
  EXPECT_TRUE(testing::rows_equal(want, collect_rowtext(dir / "lab.rtx", s, preds, &st)));
  EXPECT_EQ(st.rows_read, labs.size());
  EXPECT_FALSE(want.empty());
}

TEST(RowText, ByteDeterministic) {
  TempDir dir;
  std::vector<Row> labs;
  GenSpec spec;
  spec.n_labs = 2000;
  generate_rows(spec, [](const Row&) {}, [&](const Row& r) { labs.push_back(r); });
  write_rowtext(labs, lab_procedure_schema(), dir / "a.rtx");
  write_rowtext(labs, lab_procedure_schema(), dir / "b.rtx");
  EXPECT_EQ(slurp(dir / "a.rtx"), slurp(dir / "b.rtx"));
}

// ---- stripes ----

std::string le32(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[i] = static_cast<char>(v >> (8 * i));
  return s;
}
std::string le64(std::uint64_t v) {
  std::string s(8, '\0');
  for (int i = 0; i < 8; ++i) s[i] = static_cast<char>(v >> (8 * i));
  return s;
}
std::string le16(std::uint16_t v) { return {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)}; }

TEST(Stripe, GoldenBytes) {
  TempDir dir;
  const TableSchema s{"g", {{"a", ColumnType::Int64, false}, {"s", ColumnType::String, true}}};
  write_stripes(std::vector<Row>{{Value{std::int64_t{1}}, Value{std::string("x")}}, {Value{std::int64_t{2}}, Value{}}},
                s, dir / "g.stp", 10);

  // Column a: encoding, rows, bitmap, two i64.
  const std::string chunk_a = std::string(1, '\0') + le32(2) + std::string(1, '\0') + le64(1) + le64(2);
  // Column s: row 1 null (bit 1), lengths [1, 0], bytes "x".
  const std::string chunk_s = std::string(1, '\0') + le32(2) + std::string(1, '\x02') + le32(1) + le32(0) + "x";
  std::string footer;
  footer += le32(2);
  footer += std::string{'\x00', '\x00'} + le16(1) + "a";
  footer += std::string{'\x02', '\x01'} + le16(1) + "s";
  footer += le64(2) + le32(1);
  footer += le64(4) + le64(chunk_a.size() + chunk_s.size()) + le32(2);
  footer += le64(chunk_a.size()) + le32(0) + '\x01' + le64(1) + le64(2);
  footer += le64(chunk_s.size()) + le32(1) + '\x01' + le32(1) + "x" + le32(1) + "x";
  const std::string want = "STRP" + chunk_a + chunk_s + footer + le32(footer.size()) + "STRP";
  EXPECT_EQ(slurp(dir / "g.stp"), want);
}

TEST(Stripe, CeilingStripeCounts) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}}};
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 25'000; ++i) rows.push_back({Value{i}});
  const auto d = write_stripes(rows, s, dir / "c.stp", 10'000);
  EXPECT_EQ(d.row_count, 25'000u);
  const StripeFooter f = read_footer(dir / "c.stp");
  ASSERT_EQ(f.stripes.size(), 3u);
  EXPECT_EQ(f.stripes[0].row_count, 10'000u);
  EXPECT_EQ(f.stripes[1].row_count, 10'000u);
  EXPECT_EQ(f.stripes[2].row_count, 5'000u);
  EXPECT_EQ(std::get<std::int64_t>(*f.stripes[2].columns[0].min), 20'000);
  // Counting from the footer touches well under 1% of the file.
  EXPECT_LT(static_cast<double>(f.bytes_read), 0.01 * static_cast<double>(f.file_size));
}

TEST(Stripe, AllNullColumnHasNoBounds) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Float64}}};
  write_stripes(std::vector<Row>(5, Row{Value{}}), s, dir / "n.stp", 10);
  const StripeFooter f = read_footer(dir / "n.stp");
  ASSERT_EQ(f.stripes.size(), 1u);
  EXPECT_EQ(f.stripes[0].columns[0].null_count, 5u);
  EXPECT_FALSE(f.stripes[0].columns[0].min);
  EXPECT_FALSE(f.stripes[0].columns[0].max);
  ScanStats st;
  EXPECT_TRUE(collect_stripes(dir / "n.stp", s, {{0, CompareOp::Ne, Value{1.0}}}, true, &st).empty());
  EXPECT_EQ(st.stripes_pruned, 1u);
}

TEST(Stripe, EmptyFile) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}}};
  write_stripes({}, s, dir / "e.stp");
  const StripeFooter f = read_footer(dir / "e.stp");
  EXPECT_EQ(f.row_count, 0u);
  EXPECT_TRUE(f.stripes.empty());
  EXPECT_TRUE(collect_stripes(dir / "e.stp", s).empty());
}

TEST(Stripe, TruncatedFileIsBadMagic) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}}};
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 100; ++i) rows.push_back({Value{i}});
  write_stripes(rows, s, dir / "t.stp", 10);
  const std::string bytes = slurp(dir / "t.stp");
  spit(dir / "cut.stp", bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(code_of([&] { read_footer(dir / "cut.stp"); }), ErrorCode::BadMagic);
  spit(dir / "tiny.stp", "ST");
  EXPECT_EQ(code_of([&] { read_footer(dir / "tiny.stp"); }), ErrorCode::BadMagic);
}

TEST(Stripe, InconsistentFooterIsCorrupt) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}}};
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 30; ++i) rows.push_back({Value{i}});
  write_stripes(rows, s, dir / "t.stp", 10);
  std::string bytes = slurp(dir / "t.stp");
  const std::uint32_t flen = static_cast<std::uint8_t>(bytes[bytes.size() - 8]) |
                             (static_cast<std::uint8_t>(bytes[bytes.size() - 7]) << 8);
  const std::size_t footer_at = bytes.size() - 8 - flen;
  // Footer: u32 ncols, col "x" (1+1+2+1), u64 rows, u32 stripes, then stripe 0 offset.
  const std::size_t offset_at = footer_at + 4 + 5 + 8 + 4;
  bytes[offset_at] = 7;  // stripe 0 no longer starts after the magic
  spit(dir / "bad.stp", bytes);
  EXPECT_EQ(code_of([&] { read_footer(dir / "bad.stp"); }), ErrorCode::CorruptFooter);
}

TEST(Stripe, SchemaMismatchOnScan) {
  TempDir dir;
  const TableSchema s{"t", {{"x", ColumnType::Int64}}};
  write_stripes(std::vector<Row>{{Value{std::int64_t{1}}}}, s, dir / "t.stp");
  const TableSchema other{"t", {{"x", ColumnType::String}}};
  EXPECT_EQ(code_of([&] { collect_stripes(dir / "t.stp", other); }), ErrorCode::TypeMismatch);
}

TEST(Stripe, PrunesEverythingOutOfRange) {
  TempDir dir;
  const TableSchema s{"t", {{"v", ColumnType::Float64}}};
  std::vector<Row> rows;
  for (int i = 0; i < 1000; ++i) rows.push_back({Value{static_cast<double>(i % 200)}});
  write_stripes(rows, s, dir / "v.stp", 100);
  ScanStats st;
  EXPECT_TRUE(collect_stripes(dir / "v.stp", s, {{0, CompareOp::Gt, Value{300.0}}}, true, &st).empty());
  EXPECT_EQ(st.stripes_total, 10u);
  EXPECT_EQ(st.stripes_pruned, 10u);
  EXPECT_EQ(st.rows_read, 0u);
}

TEST(Stripe, ContradictoryConjunctsPruneAll) {
  TempDir dir;
  const TableSchema s{"t", {{"v", ColumnType::Int64}}};
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 100; ++i) rows.push_back({Value{i}});
  write_stripes(rows, s, dir / "v.stp", 10);
  ScanStats st;
  collect_stripes(dir / "v.stp", s,
                  {{0, CompareOp::Gt, Value{std::int64_t{10}}}, {0, CompareOp::Lt, Value{std::int64_t{5}}}}, true, &st);
  EXPECT_EQ(st.stripes_pruned, st.stripes_total);
}

TEST(Stripe, TruncatedStringMaxNeverPrunes) {
  const std::string long_a(40, 'a');
  TempDir dir;
  const TableSchema s{"t", {{"s", ColumnType::String}}};
  write_stripes(std::vector<Row>{{Value{long_a}}}, s, dir / "s.stp");
  const StripeFooter f = read_footer(dir / "s.stp");
  EXPECT_EQ(std::get<std::string>(*f.stripes[0].columns[0].max), std::string(32, 'a'));
  // The stored max is a 32-byte prefix; the true max is larger.
  const std::vector<ColumnPredicate> preds{{0, CompareOp::Eq, Value{long_a}}};
  EXPECT_EQ(collect_stripes(dir / "s.stp", s, preds).size(), 1u);
}

TEST(Stripe, NanIsNotPrunedAway) {
  TempDir dir;
  const TableSchema s{"t", {{"v", ColumnType::Float64}}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  write_stripes(std::vector<Row>{{Value{nan}}, {Value{nan}}}, s, dir / "n.stp");
  const StripeFooter f = read_footer(dir / "n.stp");
  EXPECT_FALSE(f.stripes[0].columns[0].min);
  // NaN != 1 holds, so the stripe must be scanned.
  EXPECT_EQ(collect_stripes(dir / "n.stp", s, {{0, CompareOp::Ne, Value{1.0}}}).size(), 2u);
}

TEST(Stripe, ProjectionReadsFewerBytes) {
  TempDir dir;
  GenSpec spec;
  spec.n_labs = 20'000;
  std::vector<Row> encounters;
  generate_rows(spec, [&](const Row& r) { encounters.push_back(r); }, [](const Row&) {});
  TableSchema s = encounter_schema();
  s.columns.push_back({"extra", ColumnType::Int64, false});
  for (auto& r : encounters) r.push_back(Value{std::int64_t{7}});
  ASSERT_EQ(s.columns.size(), 6u);
  write_stripes(encounters, s, dir / "e.stp");
  ScanStats one, all;
  collect_stripes(dir / "e.stp", s, {}, true, &one, {1});
  collect_stripes(dir / "e.stp", s, {}, true, &all);
  EXPECT_LT(static_cast<double>(one.bytes_read), static_cast<double>(all.bytes_read) / 3);
}

TEST(Stripe, GeneratedPruneOnOffAgree) {
  TempDir dir;
  std::vector<Row> labs;
  generate_rows(GenSpec{}, [](const Row&) {}, [&](const Row& r) { labs.push_back(r); });
  const TableSchema s = lab_procedure_schema();
  write_stripes(labs, s, dir / "l.stp");
  const std::vector<ColumnPredicate> preds{{0, CompareOp::Lt, Value{std::int64_t{35'000}}},
                                           {2, CompareOp::Eq, Value{std::string("LC03")}}};
  ScanStats on_stats, off_stats;
  const auto on = collect_stripes(dir / "l.stp", s, preds, true, &on_stats);
  const auto off = collect_stripes(dir / "l.stp", s, preds, false, &off_stats);
  EXPECT_TRUE(testing::rows_equal(on, off));
  EXPECT_EQ(on_stats.stripes_pruned, 6u);
  EXPECT_EQ(off_stats.stripes_pruned, 0u);
  EXPECT_LT(on_stats.bytes_read, off_stats.bytes_read);
}

TEST(Stripe, ByteDeterministic) {
  TempDir dir;
  std::vector<Row> labs;
  GenSpec spec;
  spec.n_labs = 5000;
  generate_rows(spec, [](const Row&) {}, [&](const Row& r) { labs.push_back(r); });
  write_stripes(labs, lab_procedure_schema(), dir / "a.stp", 1000);
  write_stripes(labs, lab_procedure_schema(), dir / "b.stp", 1000);
  EXPECT_EQ(slurp(dir / "a.stp"), slurp(dir / "b.stp"));
}

TEST(Stripe, RandomizedProperties) {
  TempDir dir;
  const auto rep = testing::run_stripe_properties(7, 150, dir.path());
  EXPECT_EQ(rep.failures, 0) << rep.first_failure;
  EXPECT_EQ(rep.files, 150);
}

}  // namespace
}  // namespace stripehouse
