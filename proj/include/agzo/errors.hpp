// Copyright 2026 The agzo-lab Authors
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

#ifndef AGZO_ERRORS_HPP_
#define AGZO_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agzo {

// Base type for everything the library throws.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch or out-of-range dimensions.
class dimension_error : public error {
 public:
  using error::error;
};

// Rank deficiency detected by a factorization. Carries the offending column.
class rank_error : public error {
 public:
  rank_error(const std::string& what, std::size_t column)
      : error(what), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

// Non-finite values or other numeric breakdown. layer() is -1 when the
// failure is not attached to a model layer.
class numeric_error : public error {
 public:
  explicit numeric_error(const std::string& what, int layer = -1)
      : error(what), layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

// Argument outside the mathematical domain of an operation.
class domain_error : public error {
 public:
  using error::error;
};

// Bad, missing, or unknown configuration.
class config_error : public error {
 public:
  using error::error;
};

// A theory-backed internal check failed. If one of these fires, either the
// implementation or the input contract is broken.
class invariant_error : public error {
 public:
  using error::error;
};

}  // namespace agzo

#endif  // AGZO_ERRORS_HPP_
