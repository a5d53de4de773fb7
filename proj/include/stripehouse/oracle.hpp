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

#include <vector>

#include "stripehouse/catalog.hpp"
#include "stripehouse/engine.hpp"
#include "stripehouse/query.hpp"

namespace stripehouse {

/// Reference evaluator: filters rows one at a time, joins with a nested hash
/// lookup, categorizes by linear search over the edges and aggregates into
/// ordered containers. `tables[i]` holds the full rows of query.tables[i].
/// Intended for tables up to ~10^6 rows.
ResultTable brute_force(const ResolvedQuery& query, const std::vector<std::vector<Row>>& tables);

/// Reads every row of `entry` in partition order (test helper).
std::vector<Row> read_all_rows(const TableEntry& entry, const Catalog& catalog);

}  // namespace stripehouse
