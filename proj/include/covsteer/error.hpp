/*
 Copyright 2026 The covsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef COVSTEER_ERROR_HPP
#define COVSTEER_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace covsteer {

// Coarse error classes. The CLI maps each one to a distinct exit code and
// prints the category name so scripts can branch on it.
enum class ErrorCategory {
  kInvalidArgument,
  kParse,
  kDomain,       // singular radius, nonpositive mass, indefinite matrix
  kNumerical,    // integrator or factorization failure
  kInfeasible,
  kNotConverged,
  kIo,
};

std::string_view category_name(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace covsteer

#endif  // COVSTEER_ERROR_HPP
