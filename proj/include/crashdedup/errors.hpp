// Copyright 2026 The crashdedup Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRASHDEDUP_ERRORS_HPP_
#define CRASHDEDUP_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crashdedup {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corpus directory is missing, unreadable, or violates the layout contract.
class CorpusError : public Error {
 public:
  using Error::Error;
};

// A vector (or prefix of one) has zero norm where a direction is required.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

// Transport or authentication failure talking to an embedding provider.
// Retrying may succeed; `unresolved()` lists content hashes still missing.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::vector<std::string> unresolved)
      : Error(what), unresolved_(std::move(unresolved)) {}
  const std::vector<std::string>& unresolved() const { return unresolved_; }

 private:
  std::vector<std::string> unresolved_;
};

// The provider answered, but the answer does not fit the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Clustering and ground truth disagree on which ids exist.
class IdMismatchError : public Error {
 public:
  IdMismatchError(const std::string& what,
                  std::vector<std::string> only_in_clusters,
                  std::vector<std::string> only_in_truth)
      : Error(what),
        only_in_clusters_(std::move(only_in_clusters)),
        only_in_truth_(std::move(only_in_truth)) {}
  const std::vector<std::string>& only_in_clusters() const {
    return only_in_clusters_;
  }
  const std::vector<std::string>& only_in_truth() const {
    return only_in_truth_;
  }

 private:
  std::vector<std::string> only_in_clusters_;
  std::vector<std::string> only_in_truth_;
};

}  // namespace crashdedup

#endif  // CRASHDEDUP_ERRORS_HPP_
