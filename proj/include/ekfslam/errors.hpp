#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ekfslam
{

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (non-finite value,
/// non-positive time step, zero range, ...).
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Landmark and robot positions coincide, so bearing is undefined.
class DegenerateGeometryError : public Error
{
public:
  using Error::Error;
};

class UnknownLandmarkError : public Error
{
public:
  using Error::Error;
};

/// Invalid scenario or pipeline configuration.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Runs being compared do not share the same timeline.
class AlignmentError : public Error
{
public:
  using Error::Error;
};

/// Malformed input text. Carries the source name and 1-based line number.
class ParseError : public Error
{
public:
  ParseError(std::string source, std::size_t line, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ": " + what),
      source_(std::move(source)),
      line_(line)
  {
  }

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

private:
  std::string source_;
  std::size_t line_;
};

}  // namespace ekfslam
