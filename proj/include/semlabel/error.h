#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semlabel {

// Base class for every failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input geometry admits no unique answer (coincident points, empty maps).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Malformed input bytes. `offset` is a byte offset for binary/YAML inputs and
// a 1-based line number for line-oriented inputs (see `is_line`).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset, bool is_line = false)
      : Error(what), offset_(offset), is_line_(is_line) {}

  std::size_t offset() const { return offset_; }
  bool is_line() const { return is_line_; }

 private:
  std::size_t offset_;
  bool is_line_;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

// Failure tied to one record of a stream; `index` is 0-based.
class RecordError : public Error {
 public:
  RecordError(const std::string& what, std::size_t index)
      : Error("record " + std::to_string(index) + ": " + what), index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace semlabel
