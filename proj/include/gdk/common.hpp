#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdk {

// Error taxonomy mirrored by the CLI exit codes: usage(1), validation(2), numeric(3).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : ValidationError {
    using ValidationError::ValidationError;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

template <class T>
bool all_finite(const std::vector<T>& v) {
    for (const T& x : v) {
        if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
}

}  // namespace gdk
