#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "martfl/rng.hpp"

namespace martfl {

struct KMeansResult {
    std::vector<int> assignment;     // one cluster per point
    std::vector<double> centroids;   // size k
    double distortion = 0.0;         // sum of squared distances to centroids
};

namespace detail {

inline double interpolated_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

/// Lloyd's algorithm on 1-D scores. Initial centroids are quantile-spread over
/// the sorted data (deterministic), assignment ties break toward the lower
/// cluster index, and an emptied cluster steals the point currently farthest
/// from its own centroid. At most 100 iterations.
inline KMeansResult kmeans_scores(const std::vector<double>& xs, int k, uint64_t seed) {
    (void)seed;  // initialization is fully deterministic; seed kept for interface stability
    if (k < 1 || static_cast<size_t>(k) > xs.size())
        throw std::invalid_argument("kmeans_scores: need 1 <= k <= |scores|");

    KMeansResult res;
    res.centroids.resize(k);
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    for (int j = 0; j < k; ++j)
        res.centroids[j] = detail::interpolated_quantile(sorted, (j + 0.5) / k);

    res.assignment.assign(xs.size(), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < xs.size(); ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                double d = (xs[i] - res.centroids[j]) * (xs[i] - res.centroids[j]);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }

        // Refill any emptied cluster with the worst-fitting point.
        std::vector<int> count(k, 0);
        for (int a : res.assignment) ++count[a];
        for (int j = 0; j < k; ++j) {
            if (count[j] > 0) continue;
            size_t worst = 0;
            double worst_d = -1.0;
            for (size_t i = 0; i < xs.size(); ++i) {
                if (count[res.assignment[i]] <= 1) continue;
                double d = std::abs(xs[i] - res.centroids[res.assignment[i]]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            --count[res.assignment[worst]];
            res.assignment[worst] = j;
            ++count[j];
            changed = true;
        }

        std::vector<double> sum(k, 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (size_t i = 0; i < xs.size(); ++i) {
            sum[res.assignment[i]] += xs[i];
            ++count[res.assignment[i]];
        }
        for (int j = 0; j < k; ++j)
            if (count[j] > 0) res.centroids[j] = sum[j] / count[j];
        if (!changed && iter > 0) break;
    }

    res.distortion = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double d = xs[i] - res.centroids[res.assignment[i]];
        res.distortion += d * d;
    }
    return res;
}

namespace detail {

inline double log_dispersion(double w) {
    // Guards log(0) for degenerate clusterings (e.g. k == n).
    return std::log(std::max(w, 1e-12));
}

}  // namespace detail

/// Gap-statistic estimate of the cluster count on 1-D scores.
///
/// B uniform reference draws over [min, max], Gap(k) = E[log W_ref] - log W_k,
/// pick the smallest k with Gap(k) >= Gap(k+1) - s_{k+1}. Deterministic given
/// the seed.
inline int estimate_cluster_count(const std::vector<double>& scores, int k_max, int B,
                                  uint64_t seed) {
    if (scores.empty()) throw std::invalid_argument("estimate_cluster_count: empty score set");
    if (k_max < 1 || B < 1) throw std::invalid_argument("estimate_cluster_count: k_max, B >= 1");

    const int kcap = std::min<int>(k_max, static_cast<int>(scores.size()));
    double lo = scores[0], hi = scores[0];
    for (double s : scores) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (hi - lo < 1e-15 || kcap == 1) return 1;

    Rng rng(seed);
    std::vector<std::vector<double>> refs(B);
    for (int b = 0; b < B; ++b) {
        refs[b].resize(scores.size());
        for (double& v : refs[b]) v = rng.uniform(lo, hi);
    }

    std::vector<double> gap(kcap + 1, 0.0), sk(kcap + 1, 0.0);
    for (int k = 1; k <= kcap; ++k) {
        double log_w = detail::log_dispersion(kmeans_scores(scores, k, seed).distortion);
        double mean_ref = 0.0;
        std::vector<double> log_refs(B);
        for (int b = 0; b < B; ++b) {
            log_refs[b] = detail::log_dispersion(kmeans_scores(refs[b], k, seed).distortion);
            mean_ref += log_refs[b];
        }
        mean_ref /= B;
        double var = 0.0;
        for (int b = 0; b < B; ++b) var += (log_refs[b] - mean_ref) * (log_refs[b] - mean_ref);
        gap[k] = mean_ref - log_w;
        sk[k] = std::sqrt(var / B) * std::sqrt(1.0 + 1.0 / B);
    }

    for (int k = 1; k < kcap; ++k)
        if (gap[k] >= gap[k + 1] - sk[k + 1]) return k;
    return kcap;
}

enum class DistributionKind { SingleGathered, SingleScattered, Multi };

/// One cluster with score range below T means comparable quality everywhere;
/// one wide cluster is a scatter (possible attack); more clusters means
/// heterogeneous parties.
inline DistributionKind classify_distribution(int g_hat, double score_range, double T) {
    if (T <= 0.0) throw std::invalid_argument("classify_distribution: T must be > 0");
    if (g_hat >= 2) return DistributionKind::Multi;
    return score_range < T ? DistributionKind::SingleGathered : DistributionKind::SingleScattered;
}

}  // namespace martfl
