// Copyright 2026 The SegAD Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace segad {

// Error hierarchy. The CLI maps each family to an exit code:
//   ValidationError -> 2, IoError -> 3, anything else -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is readable but violates a contract (bad rows, bad shapes, bad arguments).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InconsistencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateIdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientSamplesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IndexOutOfRangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingleClassError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class VersionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// File content does not follow the on-disk format.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class NonFiniteError : public FormatError {
 public:
  NonFiniteError(const std::string& what, std::size_t index)
      : FormatError(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// A segmentation map skips one or more indices in [0, L).
class GapError : public FormatError {
 public:
  using FormatError::FormatError;
};

// File missing, unreadable or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace segad
