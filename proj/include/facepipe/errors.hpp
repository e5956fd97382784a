#ifndef FACEPIPE_ERRORS_HPP
#define FACEPIPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace facepipe {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure: missing file, unreadable source, unwritable
/// destination. Maps to CLI exit code 2.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Malformed content or contract violation on data: bad PPM header,
/// dimension mismatch, degenerate training set. Maps to CLI exit code 3.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

}  // namespace facepipe

#endif  // FACEPIPE_ERRORS_HPP
