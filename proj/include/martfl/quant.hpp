#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace martfl {

/// Fixed-point parameters mapping floats in [a - eps, b + eps] onto unsigned
/// integers in [a_q, b_q]. Convention: x = s * (q - z), so both range
/// endpoints dequantize exactly (z is real and generally fractional).
struct QuantParams {
    double a = -1.0;
    double b = 1.0;
    double eps = 0.0;
    uint32_t a_q = 0;
    uint32_t b_q = 255;
    int bits = 8;
    double s = 1.0;
    double z = 0.0;

    static QuantParams derive(double a, double b, double eps, int bits) {
        if (a >= b) throw std::invalid_argument("QuantParams: need a < b");
        if (eps <= 0.0) throw std::invalid_argument("QuantParams: need eps > 0");
        if (bits != 8 && bits != 16) throw std::invalid_argument("QuantParams: bits in {8,16}");
        QuantParams p;
        p.a = a;
        p.b = b;
        p.eps = eps;
        p.bits = bits;
        p.a_q = 0;
        p.b_q = (bits == 8) ? 255u : 65535u;
        p.s = (b - a + 2.0 * eps) / static_cast<double>(p.b_q - p.a_q);
        p.z = static_cast<double>(p.a_q) - (a - eps) / p.s;
        return p;
    }

    /// Derive from observed data; degenerate (constant) ranges are widened so
    /// that zero vectors and the like stay quantizable.
    static QuantParams from_data(const std::vector<double>& values, double eps, int bits) {
        double lo = values.empty() ? 0.0 : values[0];
        double hi = lo;
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-9) {
            lo -= 0.5;
            hi += 0.5;
        }
        return derive(lo, hi, eps, bits);
    }

    /// Round-half-up of x/s + z, clamped to the integer range.
    uint32_t quantize_one(double x, bool* clamped = nullptr) const {
        double q = std::floor(x / s + z + 0.5);
        if (clamped) *clamped = false;
        if (q < static_cast<double>(a_q)) {
            if (clamped) *clamped = true;
            return a_q;
        }
        if (q > static_cast<double>(b_q)) {
            if (clamped) *clamped = true;
            return b_q;
        }
        return static_cast<uint32_t>(q);
    }

    double dequantize_one(uint32_t q) const { return s * (static_cast<double>(q) - z); }
};

struct QuantTensor {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<uint32_t> q;  // row-major
    QuantParams params;

    uint32_t at(size_t r, size_t c) const { return q[r * cols + c]; }
    uint32_t& at(size_t r, size_t c) { return q[r * cols + c]; }
};

struct ClampStats {
    size_t clamped = 0;
    size_t total = 0;
};

inline QuantTensor quantize(const std::vector<double>& grid, size_t rows, size_t cols,
                            const QuantParams& params, ClampStats* stats = nullptr) {
    if (grid.size() != rows * cols) throw std::invalid_argument("quantize: shape mismatch");
    QuantTensor t;
    t.rows = rows;
    t.cols = cols;
    t.params = params;
    t.q.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        bool clamped = false;
        t.q[i] = params.quantize_one(grid[i], &clamped);
        if (stats) {
            ++stats->total;
            if (clamped) ++stats->clamped;
        }
    }
    return t;
}

inline std::vector<double> dequantize(const QuantTensor& t) {
    std::vector<double> out(t.q.size());
    for (size_t i = 0; i < t.q.size(); ++i) out[i] = t.params.dequantize_one(t.q[i]);
    return out;
}

}  // namespace martfl
