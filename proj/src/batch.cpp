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

#include "stripehouse/batch.hpp"

#include <utility>

#include "stripehouse/io.hpp"

namespace stripehouse {

void ColumnVector::reserve(std::size_t n) {
  nulls.reserve(n);
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: ints.reserve(n); break;
    case ColumnType::Float64: floats.reserve(n); break;
    case ColumnType::String: strings.reserve(n); break;
  }
}

void ColumnVector::append_null() {
  nulls.push_back(1);
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: ints.push_back(0); break;
    case ColumnType::Float64: floats.push_back(0.0); break;
    case ColumnType::String: strings.emplace_back(); break;
  }
}

void ColumnVector::append(const Value& v) {
  if (stripehouse::is_null(v)) {
    append_null();
    return;
  }
  nulls.push_back(0);
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: ints.push_back(std::get<std::int64_t>(v)); break;
    case ColumnType::Float64: floats.push_back(std::get<double>(v)); break;
    case ColumnType::String: strings.push_back(std::get<std::string>(v)); break;
  }
}

void ColumnVector::append_from(const ColumnVector& other, std::size_t i) {
  nulls.push_back(other.nulls[i]);
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: ints.push_back(other.ints[i]); break;
    case ColumnType::Float64: floats.push_back(other.floats[i]); break;
    case ColumnType::String: strings.push_back(other.strings[i]); break;
  }
}

Value ColumnVector::value(std::size_t i) const {
  if (nulls[i]) return Value{};
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: return Value{ints[i]};
    case ColumnType::Float64: return Value{floats[i]};
    case ColumnType::String: return Value{strings[i]};
  }
  return Value{};
}

Batch::Batch(const std::vector<ColumnType>& types) {
  columns.reserve(types.size());
  for (ColumnType t : types) columns.emplace_back(t);
}

void Batch::append_row(const Row& row) {
  for (std::size_t c = 0; c < columns.size(); ++c) columns[c].append(row[c]);
  ++num_rows;
}

void Batch::append_row_from(const Batch& other, std::size_t i) {
  for (std::size_t c = 0; c < columns.size(); ++c) columns[c].append_from(other.columns[c], i);
  ++num_rows;
}

Row Batch::row(std::size_t i) const {
  Row r;
  r.reserve(columns.size());
  for (const auto& col : columns) r.push_back(col.value(i));
  return r;
}

std::vector<Row> Batch::rows() const {
  std::vector<Row> out;
  out.reserve(num_rows);
  for (std::size_t i = 0; i < num_rows; ++i) out.push_back(row(i));
  return out;
}

void encode_column(const ColumnVector& col, std::string& out) {
  ByteWriter w(out);
  const std::size_t rows = col.size();
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(rows));
  std::string bitmap((rows + 7) / 8, '\0');
  for (std::size_t i = 0; i < rows; ++i) {
    if (col.nulls[i]) bitmap[i / 8] = static_cast<char>(bitmap[i / 8] | (1u << (i % 8)));
  }
  w.bytes(bitmap);
  switch (col.type) {
    case ColumnType::Int64:
    case ColumnType::Date:
      for (std::int64_t v : col.ints) w.i64(v);
      break;
    case ColumnType::Float64:
      for (double v : col.floats) w.f64(v);
      break;
    case ColumnType::String:
      for (const auto& s : col.strings) w.u32(static_cast<std::uint32_t>(s.size()));
      for (const auto& s : col.strings) w.bytes(s);
      break;
  }
}

ColumnVector decode_column(std::string_view bytes, ColumnType type, std::uint32_t rows) {
  ByteReader r(bytes, ErrorCode::CorruptFooter);
  if (r.u8() != 0) throw Error(ErrorCode::CorruptFooter, "unknown chunk encoding");
  if (r.u32() != rows) throw Error(ErrorCode::CorruptFooter, "chunk row count disagrees with footer");
  ColumnVector col(type);
  col.reserve(rows);
  const std::string_view bitmap = r.take((rows + 7) / 8);
  col.nulls.resize(rows);
  for (std::uint32_t i = 0; i < rows; ++i) {
    col.nulls[i] = (static_cast<std::uint8_t>(bitmap[i / 8]) >> (i % 8)) & 1u;
  }
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: {
      const std::string_view data = r.take(std::size_t{8} * rows);
      col.ints.resize(rows);
      ByteReader d(data, ErrorCode::CorruptFooter);
      for (std::uint32_t i = 0; i < rows; ++i) col.ints[i] = d.i64();
      break;
    }
    case ColumnType::Float64: {
      const std::string_view data = r.take(std::size_t{8} * rows);
      col.floats.resize(rows);
      ByteReader d(data, ErrorCode::CorruptFooter);
      for (std::uint32_t i = 0; i < rows; ++i) col.floats[i] = d.f64();
      break;
    }
    case ColumnType::String: {
      std::vector<std::uint32_t> lengths(rows);
      for (std::uint32_t i = 0; i < rows; ++i) lengths[i] = r.u32();
      col.strings.resize(rows);
      for (std::uint32_t i = 0; i < rows; ++i) col.strings[i] = std::string(r.take(lengths[i]));
      break;
    }
  }
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptFooter, "trailing bytes in chunk");
  return col;
}

std::string serialize_batch(const Batch& batch) {
  std::string out;
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(batch.columns.size()));
  w.u32(static_cast<std::uint32_t>(batch.num_rows));
  for (const auto& col : batch.columns) {
    w.u8(static_cast<std::uint8_t>(col.type));
    std::string chunk;
    encode_column(col, chunk);
    w.u64(chunk.size());
    w.bytes(chunk);
  }
  return out;
}

Batch deserialize_batch(std::string_view bytes) {
  ByteReader r(bytes, ErrorCode::IoFailure);
  const std::uint32_t ncols = r.u32();
  Batch batch;
  batch.num_rows = r.u32();
  for (std::uint32_t c = 0; c < ncols; ++c) {
    const auto type = static_cast<ColumnType>(r.u8());
    const std::uint64_t len = r.u64();
    batch.columns.push_back(decode_column(r.take(len), type, static_cast<std::uint32_t>(batch.num_rows)));
  }
  return batch;
}

}  // namespace stripehouse
