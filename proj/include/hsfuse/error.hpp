// Copyright 2026 The hsfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hsf {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  numeric = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::usage: throw UsageError(what);
    case ErrorKind::data: throw DataError(what);
    case ErrorKind::numeric: throw NumericError(what);
  }
  throw Error(kind, what);
}

/// Runs f(), prefixing any toolkit error message with `label`.
template <class F>
decltype(auto) with_context(const std::string& label, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw_error(e.kind(), label + ": " + e.what());
  }
}

}  // namespace hsf
