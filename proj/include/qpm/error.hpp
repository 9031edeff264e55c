#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qpm {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Formula text could not be parsed. `position()` is a byte offset into the input.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// Malformed file, missing key, or an artifact whose content hash does not match.
class FormatError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericError : public Error {
public:
  using Error::Error;
};

/// A pipeline stage failed. Keeps the stage name and the kind of the cause.
class StageError : public Error {
public:
  enum class Kind { InvalidArgument, Parse, Format, Io, Numeric, Other };

  StageError(std::string stage, Kind kind, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)), kind_(kind) {}

  const std::string& stage() const noexcept { return stage_; }
  Kind kind() const noexcept { return kind_; }

private:
  std::string stage_;
  Kind kind_;
};

}  // namespace qpm
