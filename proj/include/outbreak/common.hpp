#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace outbreak {

inline constexpr const char* kVersion = "0.3.0";

/// Malformed input data (files, panels, streams). Carries the offending row when known.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, long row = -1)
        : std::runtime_error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what),
          row_(row) {}

    [[nodiscard]] long row() const noexcept { return row_; }

private:
    long row_;
};

/// A covariance estimate that cannot be inverted.
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kEulerGamma = 0.57721566490153286060651209;
inline constexpr double kPi = 3.14159265358979323846264338;

/// x * log(x / y) with the 0 log 0 = 0 convention.
[[nodiscard]] inline double xlogy_ratio(double x, double y) {
    if (x == 0.0) {
        return 0.0;
    }
    return x * std::log(x / y);
}

inline void require(bool condition, const char* message) {
    if (!condition) {
        throw std::invalid_argument(message);
    }
}

}  // namespace outbreak
