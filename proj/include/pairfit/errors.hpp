/*
 * Copyright 2026 the pairfit authors
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
#include <vector>

namespace pairfit {

/// Error categories; the CLI maps these onto process exit codes.
enum class errc {
  schema,       // header/column mismatch
  validation,   // bad cell value, duplicate id, constraint violation
  integrity,    // dangling id, inconsistent pair
  empty_input,  // operation on an empty dataset
  config,       // bad configuration value
  separation,   // complete/quasi-complete separation in a logistic fit
  singularity,  // rank deficiency beyond column pruning
  convergence,  // iteration limit reached without meeting tolerance
  io,           // file read/write failure
  domain        // argument outside mathematical domain
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::schema: return "schema";
    case errc::validation: return "validation";
    case errc::integrity: return "integrity";
    case errc::empty_input: return "empty_input";
    case errc::config: return "config";
    case errc::separation: return "separation";
    case errc::singularity: return "singularity";
    case errc::convergence: return "convergence";
    case errc::io: return "io";
    case errc::domain: return "domain";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  error(errc code, const std::string& message, std::string variable)
      : error(code, message + " [" + variable + "]") {
    variable_ = std::move(variable);
  }

  errc code() const noexcept { return code_; }

  /// Offending column/variable name when the failure is attributable to one.
  const std::string& variable() const noexcept { return variable_; }

  /// Last iterate attached to convergence failures.
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  void set_last_iterate(std::vector<double> b) { last_iterate_ = std::move(b); }

 private:
  errc code_;
  std::string variable_;
  std::vector<double> last_iterate_;
};

}  // namespace pairfit
