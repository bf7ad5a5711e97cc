#pragma once

#include <stdexcept>
#include <string>

namespace relpol {

// Bad invocations: unknown flags, unknown config keys, missing arguments.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data: bad TSV records, schema violations,
// dimension mismatches, missing labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace relpol
