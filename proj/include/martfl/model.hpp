#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "martfl/core.hpp"
#include "martfl/rng.hpp"
#include "martfl/task.hpp"

namespace martfl {

enum class Arch { LinearSoftmax, OneHidden };

/// A small trainable classifier over flattened parameters.
///
/// LinearSoftmax layout: [W (C x d) row-major | b (C)], m = C*d + C.
/// OneHidden layout:     [W1 (h x d) | b1 (h) | W2 (C x h) | b2 (C)], tanh hidden.
struct LocalModel {
    Arch arch = Arch::LinearSoftmax;
    int feature_dim = 0;
    int num_classes = 0;
    int hidden = 0;  // 0 for LinearSoftmax
    ParamVector weights;

    static size_t param_count(Arch arch, int d, int c, int h) {
        if (arch == Arch::LinearSoftmax) return static_cast<size_t>(c) * d + c;
        return static_cast<size_t>(h) * d + h + static_cast<size_t>(c) * h + c;
    }

    static LocalModel zeros(Arch arch, int feature_dim, int num_classes, int hidden = 0) {
        LocalModel m;
        m.arch = arch;
        m.feature_dim = feature_dim;
        m.num_classes = num_classes;
        m.hidden = (arch == Arch::OneHidden) ? hidden : 0;
        m.weights.assign(param_count(arch, feature_dim, num_classes, m.hidden), 0.0);
        return m;
    }

    static LocalModel random_init(Arch arch, int feature_dim, int num_classes, int hidden,
                                  double stddev, uint64_t seed) {
        LocalModel m = zeros(arch, feature_dim, num_classes, hidden);
        Rng rng(seed);
        for (double& w : m.weights) w = stddev * rng.normal();
        return m;
    }

    bool dimension_ok() const {
        return weights.size() == param_count(arch, feature_dim, num_classes, hidden);
    }

    std::vector<double> logits(const std::vector<double>& x) const {
        std::vector<double> out(num_classes, 0.0);
        if (arch == Arch::LinearSoftmax) {
            const double* w = weights.data();
            for (int c = 0; c < num_classes; ++c) {
                double s = 0.0;
                for (int d = 0; d < feature_dim; ++d) s += w[c * feature_dim + d] * x[d];
                out[c] = s + weights[static_cast<size_t>(num_classes) * feature_dim + c];
            }
        } else {
            const size_t w1 = 0;
            const size_t b1 = static_cast<size_t>(hidden) * feature_dim;
            const size_t w2 = b1 + hidden;
            const size_t b2 = w2 + static_cast<size_t>(num_classes) * hidden;
            std::vector<double> act(hidden);
            for (int h = 0; h < hidden; ++h) {
                double s = weights[b1 + h];
                for (int d = 0; d < feature_dim; ++d) s += weights[w1 + h * feature_dim + d] * x[d];
                act[h] = std::tanh(s);
            }
            for (int c = 0; c < num_classes; ++c) {
                double s = weights[b2 + c];
                for (int h = 0; h < hidden; ++h) s += weights[w2 + c * hidden + h] * act[h];
                out[c] = s;
            }
        }
        return out;
    }

    /// Ties break toward the lower class index.
    int predict(const std::vector<double>& x) const {
        auto lg = logits(x);
        int best = 0;
        for (int c = 1; c < num_classes; ++c)
            if (lg[c] > lg[best]) best = c;
        return best;
    }
};

struct TrainOptions {
    int batch_size = 32;
    /// Optional per-sample loss multipliers, aligned with the dataset. Used by
    /// the backdoor adversary to blend the main and attack objectives.
    std::vector<double> sample_weights;
};

namespace detail {

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

inline void accumulate_gradient(const LocalModel& m, const Sample& s, double weight,
                                std::vector<double>& grad) {
    auto p = detail::softmax(m.logits(s.x));
    if (m.arch == Arch::LinearSoftmax) {
        for (int c = 0; c < m.num_classes; ++c) {
            double g = weight * (p[c] - (c == s.label ? 1.0 : 0.0));
            for (int d = 0; d < m.feature_dim; ++d) grad[c * m.feature_dim + d] += g * s.x[d];
            grad[static_cast<size_t>(m.num_classes) * m.feature_dim + c] += g;
        }
        return;
    }
    // One-hidden-layer backprop, tanh activation.
    const size_t w1 = 0;
    const size_t b1 = static_cast<size_t>(m.hidden) * m.feature_dim;
    const size_t w2 = b1 + m.hidden;
    const size_t b2 = w2 + static_cast<size_t>(m.num_classes) * m.hidden;
    std::vector<double> act(m.hidden);
    for (int h = 0; h < m.hidden; ++h) {
        double sum = m.weights[b1 + h];
        for (int d = 0; d < m.feature_dim; ++d) sum += m.weights[w1 + h * m.feature_dim + d] * s.x[d];
        act[h] = std::tanh(sum);
    }
    std::vector<double> dlogit(m.num_classes);
    for (int c = 0; c < m.num_classes; ++c)
        dlogit[c] = weight * (p[c] - (c == s.label ? 1.0 : 0.0));
    std::vector<double> dact(m.hidden, 0.0);
    for (int c = 0; c < m.num_classes; ++c) {
        for (int h = 0; h < m.hidden; ++h) {
            grad[w2 + c * m.hidden + h] += dlogit[c] * act[h];
            dact[h] += dlogit[c] * m.weights[w2 + c * m.hidden + h];
        }
        grad[b2 + c] += dlogit[c];
    }
    for (int h = 0; h < m.hidden; ++h) {
        double dpre = dact[h] * (1.0 - act[h] * act[h]);
        for (int d = 0; d < m.feature_dim; ++d) grad[w1 + h * m.feature_dim + d] += dpre * s.x[d];
        grad[b1 + h] += dpre;
    }
}

}  // namespace detail

/// Mini-batch SGD on softmax cross-entropy. Deterministic given the seed;
/// steps == 0 returns the input model unchanged.
inline LocalModel train_local(const LocalModel& model, const Dataset& data, int steps, double lr,
                              uint64_t seed, const TrainOptions& opts = {}) {
    if (data.empty()) throw std::invalid_argument("train_local: empty dataset");
    if (lr <= 0.0) throw std::invalid_argument("train_local: lr must be > 0");
    if (!opts.sample_weights.empty() && opts.sample_weights.size() != data.size())
        throw std::invalid_argument("train_local: sample_weights size mismatch");

    LocalModel out = model;
    Rng rng(seed);
    std::vector<double> grad(out.weights.size());
    const int batch = std::min<int>(opts.batch_size, static_cast<int>(data.size()));
    for (int step = 0; step < steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double weight_total = 0.0;
        for (int b = 0; b < batch; ++b) {
            size_t idx = static_cast<size_t>(rng.uniform_int(data.size()));
            double w = opts.sample_weights.empty() ? 1.0 : opts.sample_weights[idx];
            detail::accumulate_gradient(out, data[idx], w, grad);
            weight_total += w;
        }
        if (weight_total <= 0.0) continue;
        const double scale = lr / weight_total;
        for (size_t i = 0; i < grad.size(); ++i) out.weights[i] -= scale * grad[i];
    }
    return out;
}

/// u = Flatten(after - before), order preserving.
inline ParamVector flatten_diff(const LocalModel& after, const ParamVector& before) {
    if (after.weights.size() != before.size())
        throw std::invalid_argument("flatten_diff: dimension mismatch");
    return sub(after.weights, before);
}

inline std::pair<double, ConfusionMatrix> evaluate(const LocalModel& model, const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    ConfusionMatrix cm(model.num_classes);
    int64_t correct = 0;
    for (const auto& s : data) {
        int pred = model.predict(s.x);
        cm.at(s.label, pred) += 1;
        if (pred == s.label) ++correct;
    }
    return {static_cast<double>(correct) / static_cast<double>(data.size()), cm};
}

}  // namespace martfl
