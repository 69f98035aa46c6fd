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

#include "covsteer/error.hpp"

namespace covsteer {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid-argument";
    case ErrorCategory::kParse: return "parse-error";
    case ErrorCategory::kDomain: return "domain-error";
    case ErrorCategory::kNumerical: return "numerical-failure";
    case ErrorCategory::kInfeasible: return "infeasible";
    case ErrorCategory::kNotConverged: return "not-converged";
    case ErrorCategory::kIo: return "io-error";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return 2;
    case ErrorCategory::kParse: return 3;
    case ErrorCategory::kDomain: return 4;
    case ErrorCategory::kNumerical: return 5;
    case ErrorCategory::kInfeasible: return 6;
    case ErrorCategory::kNotConverged: return 7;
    case ErrorCategory::kIo: return 8;
  }
  return 1;
}

}  // namespace covsteer
