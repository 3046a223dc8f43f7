// Copyright 2026 The clrprune Authors.
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

namespace clrprune {

enum class ErrorKind {
  Usage,       // bad arguments or preconditions violated by the caller
  Config,      // inconsistent configuration (missing FLOPs entry, rate, ...)
  Format,      // malformed file contents
  Data,        // well-formed file with invalid values (NaN, Inf)
  Io,          // filesystem failures
  Shape,       // shape inference failed
  Structural,  // graph or plan violates a structural invariant
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library. The CLI maps kinds to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace clrprune
