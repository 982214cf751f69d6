// include/ddsd/error.hpp

// Copyright 2026  The ddsd Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DDSD_ERROR_HPP_
#define DDSD_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddsd {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a contract (bad shapes, bad ranges, inconsistent data).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based; 0 when not applicable.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string &what)
      : ValidationError(line == 0 ? what
                                  : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Transport-level failure talking to an LLM backend; retrying may help.
class BackendError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// The backend answered, but not with what the protocol requires.
class ProtocolError : public BackendError {
 public:
  ProtocolError(int status, const std::string &body_excerpt,
                const std::string &what)
      : BackendError(what), status_(status), body_excerpt_(body_excerpt) {}
  int status() const { return status_; }
  const std::string &body_excerpt() const { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddsd

#endif  // DDSD_ERROR_HPP_
