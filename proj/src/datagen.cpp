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

#include "stripehouse/datagen.hpp"

#include <fstream>

#include "stripehouse/error.hpp"
#include "stripehouse/ingest.hpp"

namespace stripehouse {

void GenSpec::validate() const {
  if (n_patients == 0) throw Error(ErrorCode::InvalidSchema, "n_patients must be positive");
  if (n_encounters == 0) throw Error(ErrorCode::InvalidSchema, "n_encounters must be positive");
  if (n_labs == 0) throw Error(ErrorCode::InvalidSchema, "n_labs must be positive");
  if (n_hospitals == 0) throw Error(ErrorCode::InvalidSchema, "n_hospitals must be positive");
  if (n_lab_codes == 0 || n_lab_codes > 100) {
    throw Error(ErrorCode::InvalidSchema, "n_lab_codes must be in [1, 100]");
  }
}

TableSchema encounter_schema() {
  return TableSchema{"encounter",
                     {{"encounter_id", ColumnType::Int64, false},
                      {"patient_id", ColumnType::Int64, false},
                      {"hospital_id", ColumnType::Int64, false},
                      {"admit_date", ColumnType::Date, false},
                      {"los_days", ColumnType::Int64, false}}};
}

TableSchema lab_procedure_schema() {
  return TableSchema{"lab_procedure",
                     {{"lab_id", ColumnType::Int64, false},
                      {"encounter_id", ColumnType::Int64, false},
                      {"lab_code", ColumnType::String, false},
                      {"result_value", ColumnType::Float64, true}}};
}

std::optional<TableSchema> builtin_schema(std::string_view table_name) {
  std::string name = to_lower(table_name);
  for (std::string_view suffix : {"_rowtext", "_stripe"}) {
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      name.resize(name.size() - suffix.size());
      break;
    }
  }
  std::optional<TableSchema> schema;
  if (name == "encounter") schema = encounter_schema();
  if (name == "lab_procedure") schema = lab_procedure_schema();
  if (schema) schema->table_name = to_lower(table_name);
  return schema;
}

void generate_rows(const GenSpec& spec, const RowCallback& on_encounter, const RowCallback& on_lab) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const std::int64_t first_day = parse_date(kFirstAdmitDate);
  const std::uint64_t day_span = static_cast<std::uint64_t>(parse_date(kLastAdmitDate) - first_day + 1);

  Row row(5);
  for (std::uint64_t e = 0; e < spec.n_encounters; ++e) {
    row[0] = static_cast<std::int64_t>(e);
    row[1] = static_cast<std::int64_t>(rng.uniform(spec.n_patients));
    row[2] = static_cast<std::int64_t>(rng.uniform(spec.n_hospitals));
    row[3] = first_day + static_cast<std::int64_t>(rng.uniform(day_span));
    row[4] = static_cast<std::int64_t>(rng.uniform(31));
    on_encounter(row);
  }

  Row lab(4);
  char code[8];
  for (std::uint64_t l = 0; l < spec.n_labs; ++l) {
    lab[0] = static_cast<std::int64_t>(l);
    lab[1] = static_cast<std::int64_t>(rng.uniform(spec.n_encounters));
    std::snprintf(code, sizeof code, "LC%02u", static_cast<unsigned>(rng.uniform(spec.n_lab_codes)));
    lab[2] = std::string(code);
    const double value = rng.unit() * kResultValueMax;
    const bool null_result = rng.uniform(kResultNullOneIn) == 0;
    lab[3] = null_result ? Value{} : Value{value};
    on_lab(lab);
  }
}

namespace {

class CsvFileWriter {
 public:
  CsvFileWriter(const std::filesystem::path& path, const TableSchema& schema) : schema_(schema) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (c) line_.push_back(',');
      line_.append(schema.columns[c].name);
    }
    line_.push_back('\n');
    out_ << line_;
    path_ = path;
  }

  void write(const Row& row) {
    line_.clear();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line_.push_back(',');
      line_.append(csv_escape(format_value(row[c], schema_.columns[c].type)));
    }
    line_.push_back('\n');
    out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  }

  void close() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoFailure, "write failed for " + path_.string());
    out_.close();
  }

 private:
  TableSchema schema_;
  std::ofstream out_;
  std::string line_;
  std::filesystem::path path_;
};

}  // namespace

GeneratedFiles generate(const GenSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  GeneratedFiles files{out_dir / "encounter.csv", out_dir / "lab_procedure.csv"};
  CsvFileWriter enc(files.encounter_csv, encounter_schema());
  CsvFileWriter lab(files.lab_procedure_csv, lab_procedure_schema());
  generate_rows(
      spec, [&](const Row& r) { enc.write(r); }, [&](const Row& r) { lab.write(r); });
  enc.close();
  lab.close();
  return files;
}

}  // namespace stripehouse
