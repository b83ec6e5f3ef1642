// Copyright 2026 The weakmeas Authors
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

namespace weakmeas {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Bloch vector or density matrix outside the physical state space.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class NonHermitianError : public Error {
 public:
  using Error::Error;
};

/// Non-positive interaction time, malformed grid, and similar bad arguments.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// 1 + r_i . r_f fell below the post-selection guard.
class NearOrthogonalPostselectionError : public Error {
 public:
  NearOrthogonalPostselectionError(const std::string& what, double overlap)
      : Error(what), overlap_(overlap) {}
  double overlap() const noexcept { return overlap_; }

 private:
  double overlap_;
};

class RecordRejectedError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The design matrix is too close to singular to invert.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition_number)
      : Error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

/// Malformed config or record file; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace weakmeas
