/* Copyright 2026 The absagan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ABSAGAN_ERRORS_HPP_
#define ABSAGAN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace absagan {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape mismatch between tensors fed to an operation.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape error: " + what) {}
};

/// An operation produced NaN or Inf. Training treats this as divergence.
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& what)
      : Error("non-finite value: " + what) {}
};

/// Malformed input data (corpus, embeddings, lexicon, config, checkpoint).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data error: " + what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error("invalid argument: " + what) {}
};

}  // namespace absagan

#endif  // ABSAGAN_ERRORS_HPP_
