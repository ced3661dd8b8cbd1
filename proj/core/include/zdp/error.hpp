// Copyright 2026 The ZDP Authors
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

namespace zdp {

/// Raised when a caller violates an operation's documented precondition
/// (shape mismatch, out-of-range parameter, non-orthonormal basis, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces non-finite values or hits a
/// numerical degeneracy (rank collapse, dead gradient with no fallback).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the matrix file readers. The message names the byte offset.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void fail_argument(const std::string& what) {
  throw InvalidArgument(what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail_argument(what);
}

}  // namespace detail
}  // namespace zdp
