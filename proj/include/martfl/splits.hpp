#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "martfl/rng.hpp"
#include "martfl/task.hpp"

namespace martfl {

enum class SplitKind { UNI, POW };
enum class DistKind { IID, NonIID };
enum class BiasScenario { TypeI, TypeII, Unbiased };

inline const char* split_kind_name(SplitKind k) { return k == SplitKind::UNI ? "UNI" : "POW"; }
inline const char* dist_kind_name(DistKind k) { return k == DistKind::IID ? "IID" : "NonIID"; }
inline const char* bias_scenario_name(BiasScenario b) {
    switch (b) {
        case BiasScenario::TypeI: return "TypeI";
        case BiasScenario::TypeII: return "TypeII";
        case BiasScenario::Unbiased: return "Unbiased";
    }
    return "?";
}

struct SplitSpec {
    SplitKind split = SplitKind::UNI;
    DistKind distribution = DistKind::IID;
    BiasScenario bias = BiasScenario::Unbiased;
    double biased_fraction = 0.0;  // share of DPs holding half-class data under NonIID
    size_t total_samples = 2000;
    double root_fraction = 0.02;   // root size relative to total DP data
    double dominant_mass = 0.9;    // label mass on the dominant half of a biased root
    double pow_exponent = 1.2;     // sizes proportional to rank^(-exponent), largest first
};

struct SplitResult {
    std::vector<Dataset> dp_data;
    Dataset root;
    std::vector<size_t> sizes;
    std::vector<bool> biased;      // which DPs sample from a class subset
    std::vector<int> root_half;    // dominant classes of the root (biased scenarios)
};

namespace detail {

inline std::vector<size_t> uni_sizes(size_t total, int n) {
    std::vector<size_t> sizes(n, total / n);
    for (size_t i = 0; i < total % n; ++i) ++sizes[i];
    return sizes;
}

inline std::vector<size_t> pow_sizes(size_t total, int n, double exponent) {
    std::vector<double> w(n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        w[i] = std::pow(static_cast<double>(i + 1), -exponent);
        wsum += w[i];
    }
    std::vector<size_t> sizes(n);
    size_t assigned = 0;
    for (int i = 0; i < n; ++i) {
        sizes[i] = static_cast<size_t>(std::floor(static_cast<double>(total) * w[i] / wsum));
        assigned += sizes[i];
    }
    sizes[0] += total - assigned;  // remainder to the largest DP
    // Repair ties so sizes are strictly decreasing; surplus moves to DP 0.
    for (int i = 1; i < n; ++i) {
        if (sizes[i] >= sizes[i - 1]) {
            size_t target = sizes[i - 1] > 0 ? sizes[i - 1] - 1 : 0;
            size_t surplus = sizes[i] - target;
            sizes[i] = target;
            sizes[0] += surplus;
        }
        if (sizes[i] == 0) throw std::invalid_argument("pow_sizes: sample budget too small");
    }
    return sizes;
}

inline std::vector<int> random_half(int num_classes, Rng& rng) {
    std::vector<int> classes(num_classes);
    for (int c = 0; c < num_classes; ++c) classes[c] = c;
    rng.shuffle(classes);
    classes.resize(std::max(1, num_classes / 2));
    std::sort(classes.begin(), classes.end());
    return classes;
}

}  // namespace detail

/// Deterministic partition of synthetic data. `biased_mask` selects which DPs
/// get class-subset data under NonIID; when empty, the first
/// ceil(biased_fraction * n) DPs are biased.
inline SplitResult split_data(const SyntheticTask& task, int n_dps, const SplitSpec& spec,
                              uint64_t seed, const std::vector<bool>& biased_mask = {}) {
    if (n_dps < 2) throw std::invalid_argument("split_data: n_dps >= 2");
    if (spec.total_samples < static_cast<size_t>(n_dps))
        throw std::invalid_argument("split_data: n_dps exceeds sample budget");

    Rng rng(seed);
    SplitResult out;
    out.sizes = (spec.split == SplitKind::UNI)
                    ? detail::uni_sizes(spec.total_samples, n_dps)
                    : detail::pow_sizes(spec.total_samples, n_dps, spec.pow_exponent);

    out.biased.assign(n_dps, false);
    if (spec.distribution == DistKind::NonIID) {
        if (!biased_mask.empty()) {
            if (biased_mask.size() != static_cast<size_t>(n_dps))
                throw std::invalid_argument("split_data: biased_mask size mismatch");
            out.biased = biased_mask;
        } else {
            int k = static_cast<int>(std::ceil(spec.biased_fraction * n_dps));
            for (int i = 0; i < std::min(k, n_dps); ++i) out.biased[i] = true;
        }
    }

    // The root's dominant half; drawn even for Unbiased so the RNG stream is
    // scenario-independent.
    std::vector<int> root_half = detail::random_half(task.num_classes, rng);
    if (spec.bias != BiasScenario::Unbiased) out.root_half = root_half;

    Rng root_rng = rng.fork(0x0c07);
    size_t root_count = std::max<size_t>(
        20, static_cast<size_t>(std::llround(spec.root_fraction * spec.total_samples)));
    if (spec.bias == BiasScenario::Unbiased) {
        out.root = task.sample(root_count, root_rng);
    } else {
        std::vector<double> mass(task.num_classes,
                                 (1.0 - spec.dominant_mass) /
                                     std::max(1, task.num_classes - static_cast<int>(root_half.size())));
        for (int c : root_half) mass[c] = spec.dominant_mass / root_half.size();
        out.root = task.sample_weighted(root_count, root_rng, mass);
    }

    for (int i = 0; i < n_dps; ++i) {
        Rng dp_rng = rng.fork(1000 + static_cast<uint64_t>(i));
        if (!out.biased[i]) {
            out.dp_data.push_back(task.sample(out.sizes[i], dp_rng));
            continue;
        }
        std::vector<int> subset;
        if (spec.bias == BiasScenario::TypeI) {
            subset = root_half;  // biased DPs mirror the root's distribution
        } else {
            subset = detail::random_half(task.num_classes, dp_rng);
        }
        out.dp_data.push_back(task.sample(out.sizes[i], dp_rng, &subset));
    }
    return out;
}

}  // namespace martfl
