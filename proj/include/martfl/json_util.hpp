#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include <json.hpp>

namespace martfl {

using Json = nlohmann::ordered_json;  // insertion order preserved -> canonical envelopes

/// Doubles cross serialization boundaries as shortest round-trip decimal
/// strings so that replayed artifacts are byte-identical.
inline std::string double_to_string(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Prefer the shortest representation that round-trips.
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

inline double double_from_string(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

}  // namespace martfl
