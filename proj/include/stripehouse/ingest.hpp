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
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/stripe.hpp"

namespace stripehouse {

/// Incremental reader for comma-separated records with RFC-4180 quoting
/// (quoted fields, "" escape, embedded newlines). CRLF line ends accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record; false at end of input. Throws ParseError on a
  /// quote in an unquoted field or an unterminated quoted field.
  bool next(std::vector<std::string>& fields);
  /// 1-based number of the record last returned.
  std::uint64_t record_number() const { return record_; }

 private:
  int get();

  std::istream& in_;
  std::string buf_;
  std::size_t pos_ = 0;
  std::uint64_t record_ = 0;
};

/// Quotes `field` if it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

struct IngestOptions {
  StorageFormat format = StorageFormat::Stripe;
  std::uint32_t partitions = kDefaultPartitions;
  std::uint32_t stripe_size = kDefaultStripeSize;
  std::uint32_t workers = kDefaultWorkers;
};

/// Loads a CSV file (header row required, names matched case-insensitively in
/// any order) into `table`, which must already exist with options.format.
/// Rows are dealt round-robin to the partitions in batches of stripe_size;
/// every partition file is registered, including empty ones. Empty fields
/// become NULL.
TableEntry ingest_csv(Catalog& catalog, const std::filesystem::path& csv, std::string_view table,
                      const IngestOptions& options);

}  // namespace stripehouse
