// Copyright 2026 The schro Authors
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

namespace schro {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent arguments (dimension mismatch, non-finite data).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Truncation too large for the discretization.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Index bound exceeds the available truncation.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A scan would exceed its size cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate values or an unrecoverable numerical condition.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure ran out of time budget before reaching its target.
class TimeoutError : public NumericalError {
 public:
  TimeoutError(const std::string& what, double best) : NumericalError(what), best_(best) {}
  double best() const noexcept { return best_; }

 private:
  double best_;
};

/// A control amplitude budget could not be met.
class BudgetError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace schro
