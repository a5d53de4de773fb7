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
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/io.hpp"
#include "stripehouse/predicate.hpp"
#include "stripehouse/storage.hpp"

// Columnar stripe files (.stp), all integers little-endian:
//
//   "STRP" | stripe 0 | ... | stripe n-1 | footer | u32 footer_length | "STRP"
//
// A stripe holds one chunk per column in schema order:
//   u8 encoding (0 = plain) | u32 row_count | null bitmap (ceil(rows/8), LSB
//   first) | data
// where data is one i64 / f64 per row (DATE as i64 days), or for STRING a u32
// length per row followed by the concatenated bytes. Null slots hold 0 / an
// empty string.
//
// Footer:
//   u32 column_count, per column {u8 type, u8 nullable, u16 name_len, name}
//   u64 row_count
//   u32 stripe_count, per stripe:
//     u64 offset, u64 length, u32 row_count,
//     per column {u64 chunk_length, u32 null_count, u8 has_min_max, [min, max]}
//   min/max: i64 or f64, or for STRING u32 length + at most 32 bytes.

namespace stripehouse {

inline constexpr std::uint32_t kDefaultStripeSize = 10'000;
inline constexpr char kStripeMagic[4] = {'S', 'T', 'R', 'P'};

struct StripeInfo {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  std::uint32_t row_count = 0;
  std::vector<std::uint64_t> chunk_lengths;
  std::vector<ColumnStats> columns;

  bool operator==(const StripeInfo&) const = default;
};

struct StripeFooter {
  std::vector<ColumnDef> columns;
  std::uint64_t row_count = 0;
  std::vector<StripeInfo> stripes;
  std::uint64_t bytes_read = 0;  // bytes touched to load the footer
  std::uint64_t file_size = 0;
};

/// Streaming writer; stripes are cut every `stripe_size` rows.
class StripeWriter {
 public:
  StripeWriter(const std::filesystem::path& path, TableSchema schema,
               std::uint32_t stripe_size = kDefaultStripeSize);

  void append(const Row& row);
  std::uint64_t finish();
  std::uint64_t rows_written() const { return rows_; }

 private:
  void flush_stripe();

  std::filesystem::path path_;
  TableSchema schema_;
  std::uint32_t stripe_size_;
  std::ofstream out_;
  std::uint64_t offset_ = 0;
  Batch pending_;
  std::vector<StripeInfo> stripes_;
  std::uint64_t rows_ = 0;
  bool finished_ = false;
};

PartitionDescriptor write_stripes(std::span<const Row> rows, const TableSchema& schema,
                                  const std::filesystem::path& path,
                                  std::uint32_t stripe_size = kDefaultStripeSize);

/// Reads only the trailer and footer. Throws BadMagic or CorruptFooter; with
/// `expected` given, throws TypeMismatch if the stored schema differs.
StripeFooter read_footer(const std::filesystem::path& path,
                         const TableSchema* expected = nullptr);

/// Open stripe file; `read_stripe` may be called concurrently.
class StripeReader {
 public:
  explicit StripeReader(const std::filesystem::path& path, const TableSchema* expected = nullptr);
  /// Reuses a footer already read from `path`.
  StripeReader(const std::filesystem::path& path, StripeFooter footer);

  const StripeFooter& footer() const { return footer_; }
  std::size_t stripe_count() const { return footer_.stripes.size(); }

  /// Decodes the chunks needed for `projection` and `predicates` of stripe
  /// `index`, applies the predicates and returns the projected rows that pass.
  /// Adds rows/bytes touched to `stats`.
  Batch read_stripe(std::size_t index, const std::vector<std::size_t>& projection,
                    std::span<const ColumnPredicate> predicates, ScanStats& stats) const;

 private:
  InputFile file_;
  StripeFooter footer_;
};

/// True if stripe statistics prove no row of the stripe satisfies `predicates`.
bool stripe_refuted(const StripeInfo& stripe, std::span<const ColumnPredicate> predicates);

ScanStats scan_stripes(const std::filesystem::path& path, const TableSchema& schema,
                       const std::vector<std::size_t>& projection,
                       std::span<const ColumnPredicate> predicates, bool prune,
                       const BatchSink& sink);

/// Human-readable footer dump used by `stripehouse inspect`.
std::string format_footer(const StripeFooter& footer);

}  // namespace stripehouse
