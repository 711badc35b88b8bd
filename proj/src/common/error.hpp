// SPDX-License-Identifier: Apache-2.0
/**
 * @file   error.hpp
 * @brief  Exception hierarchy shared by every gremetl module. The C API maps
 *         each kind onto a status code.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gremetl {

enum class ErrorKind {
  Shape,
  Numeric,
  Usage,
  Parse,
  Validation,
  Io,
  Degenerate,
  Rejected,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
    : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Tensor shapes do not line up for an operation.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string &what) : Error(ErrorKind::Shape, what) {}
};

/// A NaN or infinity appeared; the current step is aborted.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string &what)
    : Error(ErrorKind::Numeric, what) {}
};

/// API used out of order or with arguments outside its contract.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what) : Error(ErrorKind::Usage, what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Configuration problem; `field_path` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field_path, const std::string &what);
  const std::string &field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &what) : Error(ErrorKind::Io, what) {}
};

/// Input data cannot support the requested computation (e.g. all points equal).
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string &what)
    : Error(ErrorKind::Degenerate, what) {}
};

} // namespace gremetl
