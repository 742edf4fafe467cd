#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fdm {

// Contract violation (bad sizes, malformed patterns, out-of-range options).
inline void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Runtime failure (I/O, non-finite data, failed external call).
[[noreturn]] inline void fail(const std::string& msg) {
    throw std::runtime_error(msg);
}

inline bool is_finite(double x) { return std::isfinite(x); }

constexpr double kPi = 3.14159265358979323846;

}  // namespace fdm
