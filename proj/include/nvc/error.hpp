#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvc {

// Base for every error raised by the library. The CLI maps the subclasses
// onto process exit codes (see tools/nvc_main.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (video files, corrupt streams, bad configs).
class DataError : public Error {
 public:
  using Error::Error;
  DataError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_ = 0;
};

// Container or checkpoint that does not match the expected format or model.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace nvc
