#pragma once

#include <stdexcept>
#include <string>

namespace vcd {

/// Invalid user-supplied configuration (bad value, unknown key, inconsistent
/// hardware description). Maps to process exit code 1.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric or geometric failure at run time (singular matrix, degenerate
/// geometry, non-finite data, shape mismatch). Maps to exit code 2.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File-system / codec failure. Maps to exit code 3.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Matrix inversion requested on a (near-)singular matrix. Carries the
/// offending determinant.
class SingularMatrixError : public NumericError {
  public:
    SingularMatrixError(const std::string& msg, double det)
        : NumericError(msg), determinant_(det) {}
    double determinant() const { return determinant_; }

  private:
    double determinant_;
};

/// Array pitch is not a whole number of panel pixels; the interlace mapping
/// requires whole pixels per cell.
class MisalignedArrayError : public ConfigError {
  public:
    explicit MisalignedArrayError(const std::string& msg) : ConfigError(msg) {}
};

}  // namespace vcd
