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

#include "stripehouse/storage.hpp"

#include "stripehouse/error.hpp"

namespace stripehouse {

void check_row(const Row& row, const TableSchema& schema) {
  if (row.size() != schema.columns.size()) {
    throw Error(ErrorCode::TypeMismatch, "row has " + std::to_string(row.size()) +
                                             " values, schema has " +
                                             std::to_string(schema.columns.size()));
  }
  for (std::size_t c = 0; c < row.size(); ++c) {
    const ColumnDef& def = schema.columns[c];
    if (is_null(row[c])) {
      if (!def.nullable) throw Error(ErrorCode::TypeMismatch, "NULL in non-nullable column " + def.name);
      continue;
    }
    if (!value_matches_type(row[c], def.type)) {
      throw Error(ErrorCode::TypeMismatch,
                  "value for column " + def.name + " is not " + std::string(column_type_name(def.type)));
    }
  }
}

std::vector<ColumnType> projected_types(const TableSchema& schema,
                                        const std::vector<std::size_t>& projection) {
  std::vector<ColumnType> out;
  out.reserve(projection.size());
  for (std::size_t c : projection) out.push_back(schema.columns.at(c).type);
  return out;
}

}  // namespace stripehouse
