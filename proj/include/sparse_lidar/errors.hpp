#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparse_lidar
{

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. a non-finite angle).
class DomainError : public Error
{
  public:
    using Error::Error;
};

/// Caller violated a documented precondition.
class PreconditionError : public Error
{
  public:
    using Error::Error;
};

/// A geometric fit could not be computed from the given data.
class FitError : public Error
{
  public:
    using Error::Error;
};

/// All samples coincide, so no model is defined.
class DegenerateError : public FitError
{
  public:
    using FitError::FitError;
};

/// RANSAC found no model with enough inliers.
class NoConsensusError : public FitError
{
  public:
    using FitError::FitError;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error
{
  public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

    /// Same error with `source` prepended to the message.
    ParseError with_source(const std::string& source) const { return ParseError(source, *this); }

  private:
    ParseError(const std::string& source, const ParseError& inner)
        : Error(source + ": " + inner.what()), line_(inner.line_)
    {
    }

    std::size_t line_;
};

class IoError : public Error
{
  public:
    using Error::Error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

} // namespace sparse_lidar
