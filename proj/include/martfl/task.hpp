#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "martfl/rng.hpp"

namespace martfl {

struct Sample {
    std::vector<double> x;
    int label = 0;
};

using Dataset = std::vector<Sample>;

/// Gaussian class-mean mixture classification task. Stands in for the real
/// datasets: biased parties are realized by restricting sampling to a label
/// subset, and a fixed seed makes sampling bit-reproducible.
struct SyntheticTask {
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<std::vector<double>> class_means;  // num_classes x feature_dim
    double noise_std = 1.0;
    std::optional<std::vector<int>> label_permutation;

    /// Class means drawn on a scaled random simplex-ish layout: each mean is
    /// an isotropic Gaussian draw of norm ~ separation.
    static SyntheticTask make(int num_classes, int feature_dim, double separation,
                              double noise_std, uint64_t seed) {
        if (num_classes < 2) throw std::invalid_argument("SyntheticTask: need >= 2 classes");
        SyntheticTask t;
        t.num_classes = num_classes;
        t.feature_dim = feature_dim;
        t.noise_std = noise_std;
        Rng rng(seed);
        t.class_means.resize(num_classes);
        for (int c = 0; c < num_classes; ++c) {
            auto& mean = t.class_means[c];
            mean.resize(feature_dim);
            double nrm = 0.0;
            for (double& v : mean) {
                v = rng.normal();
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
            for (double& v : mean) v = separation * v / (nrm > 0 ? nrm : 1.0);
        }
        return t;
    }

    /// Draw `count` labelled samples. When `class_subset` is given, labels are
    /// drawn uniformly from that subset only (NonIID parties).
    Dataset sample(size_t count, Rng& rng, const std::vector<int>* class_subset = nullptr) const {
        Dataset data;
        data.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            int label;
            if (class_subset && !class_subset->empty()) {
                label = (*class_subset)[rng.uniform_int(class_subset->size())];
            } else {
                label = static_cast<int>(rng.uniform_int(num_classes));
            }
            Sample s;
            s.x.resize(feature_dim);
            const auto& mean = class_means[label];
            for (int d = 0; d < feature_dim; ++d) s.x[d] = mean[d] + noise_std * rng.normal();
            s.label = label_permutation ? (*label_permutation)[label] : label;
            data.push_back(std::move(s));
        }
        return data;
    }

    /// Weighted label draw; `mass[c]` need not be normalized. Used for
    /// dominated (biased) root datasets.
    Dataset sample_weighted(size_t count, Rng& rng, const std::vector<double>& mass) const {
        if (static_cast<int>(mass.size()) != num_classes)
            throw std::invalid_argument("sample_weighted: mass size mismatch");
        double total = 0.0;
        for (double m : mass) total += m;
        Dataset data;
        data.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            double u = rng.uniform() * total;
            int label = 0;
            double acc = 0.0;
            for (int c = 0; c < num_classes; ++c) {
                acc += mass[c];
                if (u < acc) {
                    label = c;
                    break;
                }
            }
            Sample s;
            s.x.resize(feature_dim);
            const auto& mean = class_means[label];
            for (int d = 0; d < feature_dim; ++d) s.x[d] = mean[d] + noise_std * rng.normal();
            s.label = label_permutation ? (*label_permutation)[label] : label;
            data.push_back(std::move(s));
        }
        return data;
    }
};

}  // namespace martfl
