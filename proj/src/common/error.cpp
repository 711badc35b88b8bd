// SPDX-License-Identifier: Apache-2.0
#include "common/error.hpp"

namespace gremetl {

ParseError::ParseError(std::size_t line, const std::string &what)
  : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what),
    line_(line) {}

ValidationError::ValidationError(std::string field_path, const std::string &what)
  : Error(ErrorKind::Validation, field_path + ": " + what),
    field_path_(std::move(field_path)) {}

} // namespace gremetl
