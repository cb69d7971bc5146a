// Copyright 2026 The uapkit Authors. All Rights Reserved.
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

#ifndef UAP_ERROR_HPP_
#define UAP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace uap {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes that do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid caller-supplied argument (bad index, empty set, bins < 1, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  kBadMagic,
  kVersionMismatch,
  kLengthMismatch,
  kNonFinite,
  kConsistency,
  kMalformed,
};

const char* to_string(FormatErrorKind kind);

/// A container or dataset file whose bytes do not follow the expected layout.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

/// Non-finite values or degenerate geometry met during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Two decision rows coincide, so the boundary between them is undefined.
class DegenerateBoundaryError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Training produced a non-finite loss.
class TrainingError : public NumericError {
 public:
  TrainingError(int epoch, const std::string& what)
      : NumericError("epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace uap

#endif  // UAP_ERROR_HPP_
