// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hashnews {

// Base of every error the library throws. The CLI maps ValidationError,
// ParseError and ArgumentError to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument passed to an operation (k < 1, empty token, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input data that violates a schema or cross-record constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by a tensor operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hashnews
