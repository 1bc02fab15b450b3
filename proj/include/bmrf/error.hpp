#pragma once

#include <stdexcept>
#include <string>

namespace bmrf {

// Base for every error the library raises. The CLI maps the subclasses onto
// exit codes (validation 2, runtime cap 3, I/O 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument, dimension mismatch, invalid partition, bad config value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A size cap was exceeded (template too large, lattice too large for an
// exact engine, catalog enumeration cap).
class CapError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bmrf
