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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>

#include "stripehouse/catalog.hpp"
#include "stripehouse/datagen.hpp"
#include "stripehouse/error.hpp"
#include "stripehouse/ingest.hpp"

namespace stripehouse::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "stripehouse-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Runs `f` and returns the code of the Error it throws.
template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Internal;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Generates `spec` and ingests both tables into a catalog at `root`.
inline void load_generated(const GenSpec& spec, const std::filesystem::path& csv_dir, const std::filesystem::path& root,
                           StorageFormat format, std::uint32_t stripe_size = kDefaultStripeSize,
                           std::uint32_t partitions = kDefaultPartitions) {
  const GeneratedFiles files = generate(spec, csv_dir);
  Catalog catalog(root);
  IngestOptions opts;
  opts.format = format;
  opts.stripe_size = stripe_size;
  opts.partitions = partitions;
  ingest_csv(catalog, files.encounter_csv, "encounter", opts);
  ingest_csv(catalog, files.lab_procedure_csv, "lab_procedure", opts);
}

}  // namespace stripehouse::testing
