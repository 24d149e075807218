#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace martfl {

/// Flattened model parameters or updates. Dimension is fixed per experiment
/// and identical for every party.
using ParamVector = std::vector<double>;

inline bool all_finite(const ParamVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double dot(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const ParamVector& v) { return std::sqrt(dot(v, v)); }

inline ParamVector sub(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sub: dimension mismatch");
    ParamVector out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("add: dimension mismatch");
    ParamVector out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline ParamVector scale(const ParamVector& a, double c) {
    ParamVector out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
    return out;
}

inline void axpy(ParamVector& y, double a, const ParamVector& x) {
    if (y.size() != x.size()) throw std::invalid_argument("axpy: dimension mismatch");
    for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// Cosine similarity between two updates. A zero vector on either side is
/// scored 0: a no-op submission is treated as non-aligned rather than NaN.
inline double cosine_score(const ParamVector& u_g, const ParamVector& u_i) {
    if (u_g.size() != u_i.size()) throw std::invalid_argument("cosine_score: dimension mismatch");
    double ng = norm(u_g);
    double ni = norm(u_i);
    if (ng == 0.0 || ni == 0.0) return 0.0;
    double c = dot(u_g, u_i) / (ng * ni);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

/// Row = true class, column = predicted class.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<int64_t> counts;  // row-major num_classes x num_classes

    explicit ConfusionMatrix(int classes = 0)
        : num_classes(classes), counts(static_cast<size_t>(classes) * classes, 0) {}

    int64_t& at(int truth, int predicted) {
        return counts[static_cast<size_t>(truth) * num_classes + predicted];
    }
    int64_t at(int truth, int predicted) const {
        return counts[static_cast<size_t>(truth) * num_classes + predicted];
    }

    int64_t total() const {
        int64_t t = 0;
        for (int64_t c : counts) t += c;
        return t;
    }

    int64_t trace() const {
        int64_t t = 0;
        for (int i = 0; i < num_classes; ++i) t += at(i, i);
        return t;
    }

    int64_t row_sum(int truth) const {
        int64_t t = 0;
        for (int j = 0; j < num_classes; ++j) t += at(truth, j);
        return t;
    }

    int64_t col_sum(int predicted) const {
        int64_t t = 0;
        for (int i = 0; i < num_classes; ++i) t += at(i, predicted);
        return t;
    }
};

}  // namespace martfl
