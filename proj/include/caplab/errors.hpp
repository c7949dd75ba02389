// Copyright 2026 The caplab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAPLAB_ERRORS_HPP
#define CAPLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace caplab {

// Every failure raised by the library derives from Error. kind() is a short
// stable identifier used in the CLI's JSON error output and HTTP bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CAPLAB_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(tag, what) {}        \
  };

CAPLAB_DEFINE_ERROR(DimensionError, "dimension")
CAPLAB_DEFINE_ERROR(DomainError, "domain")
CAPLAB_DEFINE_ERROR(ContractError, "contract")
CAPLAB_DEFINE_ERROR(NumericError, "numeric")
CAPLAB_DEFINE_ERROR(FormatError, "format")
CAPLAB_DEFINE_ERROR(ConfigError, "config")
CAPLAB_DEFINE_ERROR(LookupError, "lookup")

#undef CAPLAB_DEFINE_ERROR

}  // namespace caplab

#endif  // CAPLAB_ERRORS_HPP
