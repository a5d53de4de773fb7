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

#include "stripehouse/catalog.hpp"
#include "stripehouse/datagen.hpp"
#include "stripehouse/error.hpp"
#include "test_util.hpp"

namespace stripehouse {
namespace {

using testing::code_of;
using testing::TempDir;

PartitionDescriptor part(std::uint32_t id, std::uint64_t rows, StorageFormat f = StorageFormat::Stripe) {
  return {id, id % kDefaultWorkers, "tables/t/part-" + std::to_string(id), f, rows};
}

TEST(Catalog, CreateTableStartsEmpty) {
  TempDir dir;
  Catalog c(dir.path());
  const TableEntry e = c.create_table(encounter_schema(), StorageFormat::Stripe);
  EXPECT_TRUE(e.partitions.empty());
  EXPECT_EQ(e.row_count(), 0u);
  EXPECT_FALSE(e.created_at.empty());
  EXPECT_TRUE(std::filesystem::exists(c.catalog_path()));
}

TEST(Catalog, DuplicateTableRejected) {
  TempDir dir;
  Catalog c(dir.path());
  c.create_table(encounter_schema(), StorageFormat::Stripe);
  EXPECT_EQ(code_of([&] { c.create_table(encounter_schema(), StorageFormat::RowText); }), ErrorCode::DuplicateTable);
  TableSchema upper = encounter_schema();
  upper.table_name = "ENCOUNTER";
  EXPECT_EQ(code_of([&] { c.create_table(upper, StorageFormat::Stripe); }), ErrorCode::DuplicateTable);
}

TEST(Catalog, InvalidSchemas) {
  TempDir dir;
  Catalog c(dir.path());
  EXPECT_EQ(code_of([&] { c.create_table({"t", {{"a", ColumnType::Int64}, {"a", ColumnType::String}}}, StorageFormat::Stripe); }),
            ErrorCode::InvalidSchema);
  EXPECT_EQ(code_of([&] { c.create_table({"t", {{"a", ColumnType::Int64}, {"A", ColumnType::Int64}}}, StorageFormat::Stripe); }),
            ErrorCode::InvalidSchema);
  EXPECT_EQ(code_of([&] { c.create_table({"t", {}}, StorageFormat::Stripe); }), ErrorCode::InvalidSchema);
  EXPECT_EQ(code_of([&] { c.create_table({"9t", {{"a", ColumnType::Int64}}}, StorageFormat::Stripe); }),
            ErrorCode::InvalidSchema);
  EXPECT_EQ(code_of([&] { c.create_table({"t-x", {{"a", ColumnType::Int64}}}, StorageFormat::Stripe); }),
            ErrorCode::InvalidSchema);
}

TEST(Catalog, RowCountIsAdditive) {
  TempDir dir;
  Catalog c(dir.path());
  c.create_table({"t", {{"a", ColumnType::Int64}}}, StorageFormat::Stripe);
  for (std::uint32_t i = 0; i < 3; ++i) c.register_partition("t", part(i, 10'000));
  EXPECT_EQ(c.get_table("t").row_count(), 30'000u);
}

TEST(Catalog, PartitionIdsMustBeContiguous) {
  TempDir dir;
  Catalog c(dir.path());
  c.create_table({"t", {{"a", ColumnType::Int64}}}, StorageFormat::Stripe);
  c.register_partition("t", part(0, 1));
  c.register_partition("t", part(1, 1));
  EXPECT_EQ(code_of([&] { c.register_partition("t", part(5, 1)); }), ErrorCode::NonContiguousPartitionId);
  EXPECT_EQ(code_of([&] { c.register_partition("t", part(1, 1)); }), ErrorCode::NonContiguousPartitionId);
}

TEST(Catalog, PartitionFormatMustMatch) {
  TempDir dir;
  Catalog c(dir.path());
  c.create_table({"t", {{"a", ColumnType::Int64}}}, StorageFormat::Stripe);
  EXPECT_EQ(code_of([&] { c.register_partition("t", part(0, 1, StorageFormat::RowText)); }), ErrorCode::FormatMismatch);
  EXPECT_EQ(code_of([&] { c.register_partition("nope", part(0, 1)); }), ErrorCode::UnknownTable);
}

TEST(Catalog, LookupIsCaseInsensitive) {
  TempDir dir;
  Catalog c(dir.path());
  c.create_table(encounter_schema(), StorageFormat::Stripe);
  EXPECT_EQ(c.get_table("ENCOUNTER").schema.table_name, "encounter");
  EXPECT_EQ(c.get_table("Encounter"), c.get_table("encounter"));
  EXPECT_EQ(code_of([&] { c.get_table("nope"); }), ErrorCode::UnknownTable);
}

TEST(Catalog, IdentifiersAreLowercased) {
  TempDir dir;
  Catalog c(dir.path());
  const auto e = c.create_table({"MixedCase", {{"ColA", ColumnType::Int64}, {"colB", ColumnType::Date, false}}},
                                StorageFormat::RowText);
  EXPECT_EQ(e.schema.table_name, "mixedcase");
  EXPECT_EQ(e.schema.columns[0].name, "cola");
  EXPECT_EQ(e.schema.find_column("COLB"), 1u);
}

TEST(Catalog, PersistenceRoundTrip) {
  TempDir dir;
  std::vector<TableEntry> before;
  {
    Catalog c(dir.path());
    c.create_table(encounter_schema(), StorageFormat::Stripe);
    c.create_table(lab_procedure_schema(), StorageFormat::RowText);
    c.register_partition("encounter", part(0, 7));
    c.register_partition("encounter", part(1, 9));
    c.register_partition("lab_procedure", part(0, 3, StorageFormat::RowText));
    for (const auto& n : c.table_names()) before.push_back(c.get_table(n));
  }
  Catalog reopened(dir.path());
  std::vector<TableEntry> after;
  for (const auto& n : reopened.table_names()) after.push_back(reopened.get_table(n));
  EXPECT_EQ(before, after);
  EXPECT_EQ(reopened.get_table("encounter").row_count(), 16u);
  // No temp files left behind by the atomic writes.
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path())) files += entry.is_regular_file();
  EXPECT_EQ(files, 1u);
}

TEST(Catalog, SchemaSpecParsing) {
  const TableSchema s = parse_schema_spec("t", "a:INT64,b:float64?,c:STRING,d:DATE?");
  ASSERT_EQ(s.columns.size(), 4u);
  EXPECT_EQ(s.columns[1].type, ColumnType::Float64);
  EXPECT_FALSE(s.columns[0].nullable);
  EXPECT_TRUE(s.columns[1].nullable);
  EXPECT_TRUE(s.columns[3].nullable);
  EXPECT_EQ(code_of([] { parse_schema_spec("t", "a:BLOB"); }), ErrorCode::InvalidSchema);
}

TEST(Catalog, StorageFormatNames) {
  EXPECT_EQ(parse_storage_format("ROWTEXT"), StorageFormat::RowText);
  EXPECT_EQ(parse_storage_format("stripe"), StorageFormat::Stripe);
  EXPECT_FALSE(parse_storage_format("parquet"));
  EXPECT_EQ(storage_extension(StorageFormat::RowText), ".rtx");
  EXPECT_EQ(storage_extension(StorageFormat::Stripe), ".stp");
}

}  // namespace
}  // namespace stripehouse
