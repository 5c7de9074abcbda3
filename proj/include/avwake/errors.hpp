// avwake/errors.hpp

// Copyright 2026  The avwake authors

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

#ifndef AVWAKE_ERRORS_HPP_
#define AVWAKE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace avwake {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape disagreement between operands or against an op contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values crossing an op boundary, divergent training loss,
// log of a non-positive number, and similar numeric-domain failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A call that violates a documented precondition (bad stride, label
// outside {0,1}, sparsity below the current level, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Object used outside its legal lifecycle (e.g. a second backward pass
// over an already consumed graph).
class LifecycleError : public Error {
 public:
  using Error::Error;
};

// Invalid or unparsable experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Threshold calibration cannot meet the requested operating point.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// File / serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Test oracle self-check failures (e.g. non-deterministic objective).
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace avwake

#endif  // AVWAKE_ERRORS_HPP_
