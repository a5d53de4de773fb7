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
#include <stdexcept>
#include <string>
#include <string_view>

namespace stripehouse {

enum class ErrorCode {
  // catalog
  DuplicateTable,
  InvalidSchema,
  UnknownTable,
  NonContiguousPartitionId,
  FormatMismatch,
  // storage
  IllegalCharacter,
  TypeMismatch,
  IoFailure,
  MalformedRecord,
  BadMagic,
  CorruptFooter,
  // ingest
  HeaderMismatch,
  ParseError,
  ArityError,
  // query language
  LexError,
  SyntaxError,
  UnknownColumn,
  TypeError,
  NonIncreasingEdges,
  // engine
  MemoryBudgetExceeded,
  Internal,
  // service
  Protocol,
  Auth,
  Forbidden,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Error raised by the lexer or parser. `offset` is a byte offset into the
/// query text and is always <= the text length.
class QueryTextError : public Error {
 public:
  QueryTextError(ErrorCode code, std::size_t offset, const std::string& message)
      : Error(code, message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace stripehouse
