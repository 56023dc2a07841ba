#pragma once

#include <stdexcept>
#include <string>

namespace kroncov {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: malformed files, inconsistent dimensions, invalid options.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// File parsing failure; carries the 1-based line number when known.
class ParseError : public ConfigError {
public:
  ParseError(const std::string& msg, long line)
      : ConfigError(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

/// Numerical failure: non-convergence, loss of positive definiteness, etc.
class NumericError : public Error {
public:
  using Error::Error;
};

}  // namespace kroncov
