#pragma once

#include <stdexcept>

namespace hetsar {

/// Bad or inconsistent input: missing columns, malformed documents, invalid specs.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular systems, inadmissible rho, non-finite intermediate values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hetsar
