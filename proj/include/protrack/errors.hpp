// protrack/errors.hpp

// Copyright 2026 The protrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace protrack {

// Every error raised by the toolkit derives from Error. The CLI maps the
// three families onto exit codes 2 (validation), 3 (decode) and 4 (I/O).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: schema violations, unknown labels, inconsistent gold,
// dimension mismatches, out-of-range arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// Every label sequence of the requested length has score -inf.
class NoValidPath : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace protrack
