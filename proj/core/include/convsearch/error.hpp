// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <stdexcept>
#include <string>

namespace convsearch {

/// Runtime failure: unreadable or malformed data, I/O errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad user input detected before any work starts (configuration, flags,
/// method names, missing files).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
  public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line)
    {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

}  // namespace convsearch
