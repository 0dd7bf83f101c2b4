#pragma once

#include <stdexcept>
#include <string>

namespace progrisk {

// Bad flags, unknown config keys, malformed values. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files, CSV schema violations, single-class data. Exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A postcondition the library promised did not hold. Exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace progrisk
