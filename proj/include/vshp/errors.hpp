/*
 * Copyright 2026 The vshp-mpc Authors
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

namespace vshp {

// Base for every error the library raises. The C API maps the concrete type
// onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model equation was evaluated outside its domain (g <= 0, h <= 0, omega <= 0,
// arcsine argument outside [-1, 1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration, including infeasible calibration and
// undetectable estimator models.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed JSON; the message carries path:line:column.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// No admissible operating point exists for the requested demand.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// An iterative method stopped before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// Scenario name not among the built-ins.
class UnknownScenarioError : public Error {
 public:
  using Error::Error;
};

// Simulation produced non-finite values.
class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace vshp
