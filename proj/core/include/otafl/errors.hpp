// Copyright 2026 The otafl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace otafl {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerical pipeline (exit code 3 in the CLI).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky pivot fell below the relative threshold; the matrix is not
/// (numerically) positive definite.
class SingularMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// A Fisher matrix (or scalar Fisher information) is singular, so the CRLB
/// is unbounded.
class UnboundedCrlbError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularEchoGainError : public NumericError {
 public:
  SingularEchoGainError(std::size_t client, double real_part)
      : NumericError("echo gain of client " + std::to_string(client) +
                     " is near zero (Re = " + std::to_string(real_part) + ")"),
        client_(client) {}

  std::size_t client() const noexcept { return client_; }

 private:
  std::size_t client_;
};

/// Malformed or inconsistent experiment configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace otafl
