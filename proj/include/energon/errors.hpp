#pragma once

#include <stdexcept>
#include <string>

namespace energon {

// Error taxonomy mirrors the CLI exit-code contract:
//   UsageError -> 1, DataError -> 2, BackendError -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(what) {}
};

}  // namespace energon
