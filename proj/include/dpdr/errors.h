// Copyright 2026 The DPDR Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPDR_ERRORS_H_
#define DPDR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dpdr {

// Raised when a caller breaks a documented precondition (shape mismatch,
// out-of-range parameter, empty input where one is required).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what)
      : std::invalid_argument(what) {}
};

// Raised when no noise multiplier can meet the requested privacy budget.
class InfeasibleBudget : public std::runtime_error {
 public:
  InfeasibleBudget(const std::string& what, double lower_bound_eps)
      : std::runtime_error(what), lower_bound_eps_(lower_bound_eps) {}

  // Smallest epsilon reachable with the fixed parameters alone.
  double lower_bound_eps() const { return lower_bound_eps_; }

 private:
  double lower_bound_eps_;
};

// Malformed dataset files or unreadable paths.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment configuration (JSON syntax, unknown or missing keys).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dpdr

#endif  // DPDR_ERRORS_H_
