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

#include "stripehouse/stripe.hpp"

#include <algorithm>
#include <sstream>
#include <string_view>

#include "stripehouse/error.hpp"

namespace stripehouse {

namespace {

constexpr std::size_t kTrailerSize = 8;  // footer_length + magic

void encode_bound(ByteWriter& w, ColumnType type, const Value& v) {
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: w.i64(std::get<std::int64_t>(v)); break;
    case ColumnType::Float64: w.f64(std::get<double>(v)); break;
    case ColumnType::String: {
      const auto& s = std::get<std::string>(v);
      w.u32(static_cast<std::uint32_t>(s.size()));
      w.bytes(s);
      break;
    }
  }
}

Value decode_bound(ByteReader& r, ColumnType type) {
  switch (type) {
    case ColumnType::Int64:
    case ColumnType::Date: return Value{r.i64()};
    case ColumnType::Float64: return Value{r.f64()};
    case ColumnType::String: {
      const std::uint32_t n = r.u32();
      if (n > kStringStatPrefix) throw Error(ErrorCode::CorruptFooter, "string statistic too long");
      return Value{std::string(r.take(n))};
    }
  }
  return Value{};
}

std::string encode_footer(const TableSchema& schema, std::uint64_t rows,
                          const std::vector<StripeInfo>& stripes) {
  std::string out;
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(schema.columns.size()));
  for (const auto& c : schema.columns) {
    w.u8(static_cast<std::uint8_t>(c.type));
    w.u8(c.nullable ? 1 : 0);
    w.u16(static_cast<std::uint16_t>(c.name.size()));
    w.bytes(c.name);
  }
  w.u64(rows);
  w.u32(static_cast<std::uint32_t>(stripes.size()));
  for (const auto& s : stripes) {
    w.u64(s.offset);
    w.u64(s.length);
    w.u32(s.row_count);
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnStats& st = s.columns[c];
      w.u64(s.chunk_lengths[c]);
      w.u32(st.null_count);
      const bool has = st.min.has_value() && st.max.has_value();
      w.u8(has ? 1 : 0);
      if (has) {
        encode_bound(w, st.type, *st.min);
        encode_bound(w, st.type, *st.max);
      }
    }
  }
  return out;
}

}  // namespace

StripeWriter::StripeWriter(const std::filesystem::path& path, TableSchema schema,
                           std::uint32_t stripe_size)
    : path_(path), schema_(std::move(schema)), stripe_size_(stripe_size) {
  if (stripe_size_ == 0) throw Error(ErrorCode::Internal, "stripe_size must be positive");
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out_.write(kStripeMagic, 4);
  offset_ = 4;
  pending_ = Batch(schema_.types());
}

void StripeWriter::append(const Row& row) {
  check_row(row, schema_);
  pending_.append_row(row);
  ++rows_;
  if (pending_.num_rows == stripe_size_) flush_stripe();
}

void StripeWriter::flush_stripe() {
  if (pending_.num_rows == 0) return;
  StripeInfo info;
  info.offset = offset_;
  info.row_count = static_cast<std::uint32_t>(pending_.num_rows);
  std::string body;
  for (const auto& col : pending_.columns) {
    const std::size_t before = body.size();
    encode_column(col, body);
    info.chunk_lengths.push_back(body.size() - before);
    info.columns.push_back(compute_stats(col, 0, col.size()));
  }
  info.length = body.size();
  out_.write(body.data(), static_cast<std::streamsize>(body.size()));
  offset_ += body.size();
  stripes_.push_back(std::move(info));
  pending_ = Batch(schema_.types());
}

std::uint64_t StripeWriter::finish() {
  if (finished_) return rows_;
  flush_stripe();
  const std::string footer = encode_footer(schema_, rows_, stripes_);
  std::string trailer;
  ByteWriter w(trailer);
  w.u32(static_cast<std::uint32_t>(footer.size()));
  w.bytes(std::string_view(kStripeMagic, 4));
  out_.write(footer.data(), static_cast<std::streamsize>(footer.size()));
  out_.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoFailure, "write failed for " + path_.string());
  out_.close();
  finished_ = true;
  return rows_;
}

PartitionDescriptor write_stripes(std::span<const Row> rows, const TableSchema& schema,
                                  const std::filesystem::path& path, std::uint32_t stripe_size) {
  StripeWriter writer(path, schema, stripe_size);
  for (const Row& r : rows) writer.append(r);
  PartitionDescriptor desc;
  desc.path = path.string();
  desc.format = StorageFormat::Stripe;
  desc.row_count = writer.finish();
  return desc;
}

namespace {

StripeFooter load_footer(const InputFile& file, const TableSchema* expected) {
  StripeFooter f;
  f.file_size = file.size();
  if (file.size() < 4 + kTrailerSize) throw Error(ErrorCode::BadMagic, file.path().string() + ": file too short");
  const std::string trailer = file.read_at(file.size() - kTrailerSize, kTrailerSize);
  const std::string head = file.read_at(0, 4);
  f.bytes_read = kTrailerSize + 4;
  if (std::string_view(trailer).substr(4) != std::string_view(kStripeMagic, 4) ||
      head != std::string_view(kStripeMagic, 4)) {
    throw Error(ErrorCode::BadMagic, file.path().string() + ": missing STRP magic");
  }
  ByteReader tr(trailer, ErrorCode::CorruptFooter);
  const std::uint32_t footer_len = tr.u32();
  if (footer_len > file.size() - 4 - kTrailerSize) {
    throw Error(ErrorCode::CorruptFooter, "footer length exceeds file size");
  }
  const std::uint64_t footer_start = file.size() - kTrailerSize - footer_len;
  const std::string footer = file.read_at(footer_start, footer_len);
  f.bytes_read += footer_len;

  ByteReader r(footer, ErrorCode::CorruptFooter);
  const std::uint32_t ncols = r.u32();
  if (ncols > footer_len) throw Error(ErrorCode::CorruptFooter, "column count out of range");
  for (std::uint32_t c = 0; c < ncols; ++c) {
    ColumnDef def;
    const std::uint8_t type = r.u8();
    if (type > 3) throw Error(ErrorCode::CorruptFooter, "unknown column type");
    def.type = static_cast<ColumnType>(type);
    def.nullable = r.u8() != 0;
    def.name = std::string(r.take(r.u16()));
    f.columns.push_back(std::move(def));
  }
  f.row_count = r.u64();
  const std::uint32_t nstripes = r.u32();
  if (nstripes > footer_len) throw Error(ErrorCode::CorruptFooter, "stripe count out of range");
  std::uint64_t next_min_offset = 4;
  std::uint64_t total_rows = 0;
  for (std::uint32_t s = 0; s < nstripes; ++s) {
    StripeInfo info;
    info.offset = r.u64();
    info.length = r.u64();
    info.row_count = r.u32();
    if (info.offset < next_min_offset || info.length == 0 || info.length > footer_start ||
        info.offset > footer_start - info.length) {
      throw Error(ErrorCode::CorruptFooter, "stripe " + std::to_string(s) + " offset/length out of order");
    }
    next_min_offset = info.offset + info.length;
    std::uint64_t chunk_total = 0;
    for (std::uint32_t c = 0; c < ncols; ++c) {
      ColumnStats st;
      st.type = f.columns[c].type;
      st.row_count = info.row_count;
      const std::uint64_t chunk_len = r.u64();
      chunk_total += chunk_len;
      info.chunk_lengths.push_back(chunk_len);
      st.null_count = r.u32();
      if (st.null_count > info.row_count) throw Error(ErrorCode::CorruptFooter, "null_count > row_count");
      if (r.u8() != 0) {
        st.min = decode_bound(r, st.type);
        st.max = decode_bound(r, st.type);
      }
      info.columns.push_back(std::move(st));
    }
    if (chunk_total != info.length) throw Error(ErrorCode::CorruptFooter, "chunk lengths do not sum to stripe length");
    total_rows += info.row_count;
    f.stripes.push_back(std::move(info));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptFooter, "trailing bytes in footer");
  if (total_rows != f.row_count) throw Error(ErrorCode::CorruptFooter, "stripe row counts do not sum to file row count");

  if (expected) {
    bool same = expected->columns.size() == f.columns.size();
    for (std::size_t c = 0; same && c < f.columns.size(); ++c) {
      same = expected->columns[c].name == f.columns[c].name && expected->columns[c].type == f.columns[c].type;
    }
    if (!same) throw Error(ErrorCode::TypeMismatch, file.path().string() + ": stored schema differs from catalog");
  }
  return f;
}

}  // namespace

StripeFooter read_footer(const std::filesystem::path& path, const TableSchema* expected) {
  InputFile file(path);
  return load_footer(file, expected);
}

StripeReader::StripeReader(const std::filesystem::path& path, const TableSchema* expected)
    : file_(path), footer_(load_footer(file_, expected)) {}

StripeReader::StripeReader(const std::filesystem::path& path, StripeFooter footer)
    : file_(path), footer_(std::move(footer)) {}

Batch StripeReader::read_stripe(std::size_t index, const std::vector<std::size_t>& projection,
                                std::span<const ColumnPredicate> predicates, ScanStats& stats) const {
  const StripeInfo& info = footer_.stripes.at(index);
  std::vector<std::size_t> needed = projection;
  for (const auto& p : predicates) needed.push_back(p.column);
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

  std::vector<std::uint64_t> chunk_offset(footer_.columns.size());
  std::uint64_t off = info.offset;
  for (std::size_t c = 0; c < footer_.columns.size(); ++c) {
    chunk_offset[c] = off;
    off += info.chunk_lengths[c];
  }

  std::vector<std::optional<ColumnVector>> decoded(footer_.columns.size());
  for (std::size_t c : needed) {
    if (c >= footer_.columns.size()) throw Error(ErrorCode::Internal, "projection out of range");
    const std::string bytes = file_.read_at(chunk_offset[c], info.chunk_lengths[c]);
    stats.bytes_read += bytes.size();
    decoded[c] = decode_column(bytes, footer_.columns[c].type, info.row_count);
  }
  stats.rows_read += info.row_count;

  Batch out;
  for (std::size_t c : projection) out.columns.emplace_back(footer_.columns[c].type);
  if (predicates.empty()) {
    for (std::size_t k = 0; k < projection.size(); ++k) out.columns[k] = *decoded[projection[k]];
    out.num_rows = info.row_count;
    return out;
  }
  std::vector<std::uint8_t> sel(info.row_count, 1);
  for (const auto& p : predicates) filter_column(*decoded[p.column], p, sel);
  for (std::size_t i = 0; i < info.row_count; ++i) {
    if (!sel[i]) continue;
    for (std::size_t k = 0; k < projection.size(); ++k) out.columns[k].append_from(*decoded[projection[k]], i);
    ++out.num_rows;
  }
  return out;
}

bool stripe_refuted(const StripeInfo& stripe, std::span<const ColumnPredicate> predicates) {
  return stats_refute(predicates, stripe.columns);
}

ScanStats scan_stripes(const std::filesystem::path& path, const TableSchema& schema,
                       const std::vector<std::size_t>& projection,
                       std::span<const ColumnPredicate> predicates, bool prune,
                       const BatchSink& sink) {
  StripeReader reader(path, &schema);
  ScanStats stats;
  stats.bytes_read = reader.footer().bytes_read;
  stats.stripes_total = reader.stripe_count();
  for (std::size_t s = 0; s < reader.stripe_count(); ++s) {
    if (prune && stripe_refuted(reader.footer().stripes[s], predicates)) {
      ++stats.stripes_pruned;
      continue;
    }
    Batch b = reader.read_stripe(s, projection, predicates, stats);
    if (b.num_rows > 0) sink(std::move(b));
  }
  return stats;
}

std::string format_footer(const StripeFooter& footer) {
  std::ostringstream os;
  os << "columns " << footer.columns.size() << "\n";
  for (std::size_t c = 0; c < footer.columns.size(); ++c) {
    const auto& col = footer.columns[c];
    os << "  " << c << " " << col.name << " " << column_type_name(col.type)
       << (col.nullable ? " nullable" : " not-null") << "\n";
  }
  os << "rows " << footer.row_count << "\n";
  os << "stripes " << footer.stripes.size() << "\n";
  for (std::size_t s = 0; s < footer.stripes.size(); ++s) {
    const auto& st = footer.stripes[s];
    os << "stripe " << s << " offset=" << st.offset << " length=" << st.length << " rows=" << st.row_count
       << "\n";
    for (std::size_t c = 0; c < st.columns.size(); ++c) {
      const ColumnStats& cs = st.columns[c];
      os << "  " << footer.columns[c].name << " nulls=" << cs.null_count;
      if (cs.min && cs.max) {
        os << " min=" << format_value(*cs.min, cs.type) << " max=" << format_value(*cs.max, cs.type);
      } else {
        os << " min=- max=-";
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace stripehouse
