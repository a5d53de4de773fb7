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

#include "stripehouse/rowtext.hpp"

#include <algorithm>
#include <charconv>

#include "stripehouse/error.hpp"
#include "stripehouse/io.hpp"

namespace stripehouse {

RowTextWriter::RowTextWriter(const std::filesystem::path& path, TableSchema schema)
    : path_(path), schema_(std::move(schema)) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
}

void RowTextWriter::append(const Row& row) {
  check_row(row, schema_);
  line_.clear();
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c > 0) line_.push_back('|');
    const Value& v = row[c];
    if (is_null(v)) continue;
    if (const auto* s = std::get_if<std::string>(&v)) {
      if (s->empty()) {
        throw Error(ErrorCode::IllegalCharacter,
                    "empty string in column " + schema_.columns[c].name + " is indistinguishable from NULL");
      }
      if (s->find_first_of("|\n") != std::string::npos) {
        throw Error(ErrorCode::IllegalCharacter,
                    "delimiter or newline in column " + schema_.columns[c].name);
      }
      line_.append(*s);
    } else {
      line_.append(format_value(v, schema_.columns[c].type));
    }
  }
  line_.push_back('\n');
  out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  ++rows_;
}

std::uint64_t RowTextWriter::finish() {
  if (!finished_) {
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoFailure, "write failed for " + path_.string());
    out_.close();
    finished_ = true;
  }
  return rows_;
}

PartitionDescriptor write_rowtext(std::span<const Row> rows, const TableSchema& schema,
                                  const std::filesystem::path& path) {
  RowTextWriter writer(path, schema);
  for (const Row& r : rows) writer.append(r);
  PartitionDescriptor desc;
  desc.path = path.string();
  desc.format = StorageFormat::RowText;
  desc.row_count = writer.finish();
  return desc;
}

namespace {

constexpr std::size_t kReadChunk = 1 << 22;

class RowTextScanner {
 public:
  RowTextScanner(const TableSchema& schema, const std::vector<std::size_t>& projection,
                 std::span<const ColumnPredicate> predicates, const BatchSink& sink,
                 std::size_t batch_rows)
      : schema_(schema), projection_(projection), predicates_(predicates), sink_(sink),
        batch_rows_(std::max<std::size_t>(1, batch_rows)) {
    slot_of_.assign(schema.columns.size(), kNotNeeded);
    std::vector<std::size_t> needed = projection;
    for (const auto& p : predicates) needed.push_back(p.column);
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    std::vector<ColumnType> types;
    for (std::size_t c : needed) {
      if (c >= schema.columns.size()) throw Error(ErrorCode::Internal, "projection out of range");
      slot_of_[c] = types.size();
      types.push_back(schema.columns[c].type);
    }
    work_types_ = types;
    reset_work();
  }

  void line(std::string_view text, std::uint64_t line_no) {
    const std::size_t arity = schema_.columns.size();
    std::size_t start = 0;
    for (std::size_t c = 0; c < arity; ++c) {
      std::size_t end = text.find('|', start);
      if (end == std::string_view::npos) {
        if (c + 1 != arity) malformed(line_no, "expected " + std::to_string(arity) + " fields");
        end = text.size();
      } else if (c + 1 == arity) {
        malformed(line_no, "too many fields");
      }
      field(c, text.substr(start, end - start), line_no);
      start = end + 1;
    }
    ++work_.num_rows;
    if (work_.num_rows == batch_rows_) flush();
  }

  void flush() {
    if (work_.num_rows == 0) return;
    std::vector<std::uint8_t> sel(work_.num_rows, 1);
    for (const auto& p : predicates_) filter_column(work_.columns[slot_of_[p.column]], p, sel);
    Batch out(projected_types(schema_, projection_));
    const std::size_t selected = static_cast<std::size_t>(std::count(sel.begin(), sel.end(), 1));
    for (auto& col : out.columns) col.reserve(selected);
    for (std::size_t i = 0; i < work_.num_rows; ++i) {
      if (!sel[i]) continue;
      for (std::size_t k = 0; k < projection_.size(); ++k) {
        out.columns[k].append_from(work_.columns[slot_of_[projection_[k]]], i);
      }
      ++out.num_rows;
    }
    reset_work();
    if (out.num_rows > 0) sink_(std::move(out));
  }

 private:
  static constexpr std::size_t kNotNeeded = static_cast<std::size_t>(-1);

  [[noreturn]] void malformed(std::uint64_t line_no, const std::string& why) {
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + why);
  }

  void reset_work() {
    work_ = Batch(work_types_);
    for (auto& col : work_.columns) col.reserve(batch_rows_);
  }

  void field(std::size_t c, std::string_view text, std::uint64_t line_no) {
    const ColumnDef& def = schema_.columns[c];
    const std::size_t slot = slot_of_[c];
    ColumnVector* col = slot == kNotNeeded ? nullptr : &work_.columns[slot];
    if (text.empty()) {
      if (!def.nullable) malformed(line_no, "NULL in non-nullable column " + def.name);
      if (col) col->append_null();
      return;
    }
    const char* b = text.data();
    const char* e = text.data() + text.size();
    switch (def.type) {
      case ColumnType::Int64: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc{} || p != e) malformed(line_no, "bad INT64 in column " + def.name);
        if (col) {
          col->nulls.push_back(0);
          col->ints.push_back(v);
        }
        break;
      }
      case ColumnType::Float64: {
        double v = 0;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc{} || p != e) malformed(line_no, "bad FLOAT64 in column " + def.name);
        if (col) {
          col->nulls.push_back(0);
          col->floats.push_back(v);
        }
        break;
      }
      case ColumnType::Date: {
        std::int64_t v = 0;
        if (!try_parse_date(text, v)) malformed(line_no, "bad DATE in column " + def.name);
        if (col) {
          col->nulls.push_back(0);
          col->ints.push_back(v);
        }
        break;
      }
      case ColumnType::String:
        if (col) {
          col->nulls.push_back(0);
          col->strings.emplace_back(text);
        }
        break;
    }
  }

  const TableSchema& schema_;
  const std::vector<std::size_t>& projection_;
  std::span<const ColumnPredicate> predicates_;
  const BatchSink& sink_;
  std::size_t batch_rows_;
  std::vector<std::size_t> slot_of_;
  std::vector<ColumnType> work_types_;
  Batch work_;
};

}  // namespace

ScanStats scan_rowtext(const std::filesystem::path& path, const TableSchema& schema,
                       const std::vector<std::size_t>& projection,
                       std::span<const ColumnPredicate> predicates, const BatchSink& sink,
                       std::size_t batch_rows) {
  InputFile file(path);
  RowTextScanner scanner(schema, projection, predicates, sink, batch_rows);
  ScanStats stats;
  std::string carry;
  std::uint64_t offset = 0;
  while (offset < file.size()) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kReadChunk, file.size() - offset));
    std::string chunk = file.read_at(offset, n);
    offset += n;
    stats.bytes_read += n;
    std::string_view view(chunk);
    std::size_t start = 0;
    if (!carry.empty()) {
      const std::size_t nl = view.find('\n');
      if (nl == std::string_view::npos) {
        carry.append(view);
        continue;
      }
      carry.append(view.substr(0, nl));
      scanner.line(carry, ++stats.rows_read);
      carry.clear();
      start = nl + 1;
    }
    while (start < view.size()) {
      const std::size_t nl = view.find('\n', start);
      if (nl == std::string_view::npos) {
        carry.assign(view.substr(start));
        break;
      }
      scanner.line(view.substr(start, nl - start), ++stats.rows_read);
      start = nl + 1;
    }
  }
  if (!carry.empty()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(stats.rows_read + 1) + ": missing record delimiter");
  }
  scanner.flush();
  return stats;
}

}  // namespace stripehouse
