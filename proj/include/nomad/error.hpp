/*
 * Copyright (c) 2026, the nomad-projection authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace nomad {

/// Broad failure categories. The CLI maps Divergence to exit code 2 and
/// everything else to exit code 1.
enum class ErrorKind {
  Io,          // unreadable / unwritable files
  Dimension,   // shape arithmetic does not add up
  Validation,  // non-finite or otherwise malformed values in data
  Schema,      // file present but columns/headers wrong
  Parameter,   // caller passed an out-of-range argument
  Config,      // inconsistent training configuration
  Degenerate,  // input admits no meaningful answer (e.g. zero variance)
  Divergence,  // optimization produced non-finite or absurd positions
  Size,        // enumeration guard exceeded
  Internal,    // broken invariant inside the library
};

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

}  // namespace nomad
