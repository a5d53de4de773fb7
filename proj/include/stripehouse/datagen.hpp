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
#include <functional>
#include <optional>
#include <string_view>

#include "stripehouse/catalog.hpp"
#include "stripehouse/types.hpp"

namespace stripehouse {

/// SplitMix64. Identical seeds give identical streams on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, k) by multiply-shift: high 64 bits of next() * k.
  std::uint64_t uniform(std::uint64_t k) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * k) >> 64);
  }

  /// Uniform in [0, 1) from the top 53 bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

struct GenSpec {
  std::uint64_t seed = 42;
  std::uint64_t n_patients = 1000;
  std::uint64_t n_encounters = 10'000;
  std::uint64_t n_labs = 100'000;
  std::uint64_t n_hospitals = 750;
  std::uint64_t n_lab_codes = 20;

  /// Throws Error(InvalidSchema) describing the first violated constraint.
  void validate() const;
};

// Benchmark tables. Only result_value is nullable.
TableSchema encounter_schema();
TableSchema lab_procedure_schema();
/// encounter / lab_procedure, also accepting a `_rowtext` / `_stripe` suffix.
std::optional<TableSchema> builtin_schema(std::string_view table_name);

inline constexpr std::string_view kFirstAdmitDate = "2000-01-01";
inline constexpr std::string_view kLastAdmitDate = "2018-12-31";
inline constexpr double kResultValueMax = 200.0;
inline constexpr std::uint64_t kResultNullOneIn = 50;

using RowCallback = std::function<void(const Row&)>;

/// Produces all encounter rows, then all lab_procedure rows. Draws are taken
/// per row in column order.
void generate_rows(const GenSpec& spec, const RowCallback& on_encounter, const RowCallback& on_lab);

struct GeneratedFiles {
  std::filesystem::path encounter_csv;
  std::filesystem::path lab_procedure_csv;
};

/// Writes encounter.csv and lab_procedure.csv (with header rows) to `out_dir`.
GeneratedFiles generate(const GenSpec& spec, const std::filesystem::path& out_dir);

}  // namespace stripehouse
