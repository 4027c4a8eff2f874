/*
 * Copyright 2026 The repurpose Authors.
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

namespace repurpose {

// Base for all library errors. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or partition counts that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable files, unknown enum strings, bad versions.
class FormatError : public Error {
 public:
  using Error::Error;
};

// No parameter choice satisfies the requested budget.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Operation exists but not for this input (e.g. conv layer in dense pipeline).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace repurpose
