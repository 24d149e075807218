#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "martfl/clustering.hpp"
#include "martfl/core.hpp"
#include "martfl/model.hpp"
#include "martfl/rng.hpp"

namespace martfl {

struct ScoreEntry {
    int dp_id = 0;
    double score = 0.0;
};
using ScoreSet = std::vector<ScoreEntry>;

struct ClusteringTrace {
    int g_hat = 1;
    std::vector<int> first_layer;            // cluster per entry, aligned with the score set
    std::vector<double> first_centroids;     // size g_hat
    DistributionKind kind = DistributionKind::SingleGathered;
    std::optional<std::vector<int>> second_layer;  // 0 = low, 1 = high (scattered case)
    double top_centroid = 0.0;
};

struct AggregationDecision {
    std::vector<int> p1;           // high-quality set
    std::vector<int> p2;           // qualified-but-damped set
    std::vector<int> selected_p2;  // random beta-subset of p2 actually purchased
    std::map<int, double> weights;  // keyed by p1 + selected_p2, sums to 1
    double threshold = 0.0;
    double beta = 0.0;
    ClusteringTrace trace;
    bool purchasable = true;  // false when every candidate scored <= 0
};

/// First clustering layer: gap-statistic cluster count, then 1-D K-Means on
/// the scores, then the distribution case split.
inline ClusteringTrace cluster_scores(const ScoreSet& scores, double T, uint64_t seed,
                                      int k_max = 10, int B = 10) {
    if (scores.empty()) throw std::invalid_argument("cluster_scores: empty score set");
    std::vector<double> xs(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) xs[i] = scores[i].score;

    ClusteringTrace trace;
    trace.g_hat = estimate_cluster_count(xs, std::min<int>(k_max, xs.size()), B, seed);
    auto km = kmeans_scores(xs, trace.g_hat, seed);
    trace.first_layer = km.assignment;
    trace.first_centroids = km.centroids;

    double lo = xs[0], hi = xs[0];
    for (double x : xs) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    trace.kind = classify_distribution(trace.g_hat, hi - lo, T);
    trace.top_centroid = *std::max_element(km.centroids.begin(), km.centroids.end());
    return trace;
}

/// Algorithm selection step: builds P1/P2 per the distribution case, draws the
/// random beta-subset of P2, and assigns score-proportional, distance-damped,
/// normalized weights.
inline AggregationDecision select_and_weight(const ScoreSet& scores, const ClusteringTrace& trace,
                                             double T, double beta, uint64_t seed) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("select_and_weight: beta in [0,1]");
    if (scores.size() != trace.first_layer.size())
        throw std::invalid_argument("select_and_weight: trace does not match score set");

    AggregationDecision dec;
    dec.threshold = T;
    dec.beta = beta;
    dec.trace = trace;

    const size_t n = scores.size();
    std::vector<size_t> p1_idx, p2_idx;
    // Damping distance for each P2 entry: |top centroid - its cluster centroid|.
    std::vector<double> p2_dist;

    switch (trace.kind) {
        case DistributionKind::SingleGathered: {
            for (size_t i = 0; i < n; ++i) p1_idx.push_back(i);
            break;
        }
        case DistributionKind::SingleScattered: {
            // Second layer: K-Means with g=2 over the raw scores.
            std::vector<double> xs(n);
            for (size_t i = 0; i < n; ++i) xs[i] = scores[i].score;
            auto km = kmeans_scores(xs, std::min<size_t>(2, n), seed);
            int high = km.centroids.size() == 2 && km.centroids[1] > km.centroids[0] ? 1 : 0;
            double c_top = km.centroids[high];
            double c_low = km.centroids[km.centroids.size() == 2 ? 1 - high : high];
            std::vector<int> second(n);
            for (size_t i = 0; i < n; ++i) {
                second[i] = (km.assignment[i] == high) ? 1 : 0;
                if (second[i]) {
                    p1_idx.push_back(i);
                } else {
                    p2_idx.push_back(i);
                    p2_dist.push_back(std::abs(c_top - c_low));
                }
            }
            dec.trace.second_layer = second;
            dec.trace.top_centroid = c_top;
            break;
        }
        case DistributionKind::Multi: {
            // Second layer clusters the first-layer centroids into a high- and
            // a low-quality category; the low category is discarded.
            auto cat = kmeans_scores(trace.first_centroids,
                                     std::min<size_t>(2, trace.first_centroids.size()), seed);
            int top_cluster = 0;
            for (size_t j = 1; j < trace.first_centroids.size(); ++j)
                if (trace.first_centroids[j] > trace.first_centroids[top_cluster])
                    top_cluster = static_cast<int>(j);
            int high_cat = cat.assignment[top_cluster];
            double c_top = trace.first_centroids[top_cluster];
            dec.trace.top_centroid = c_top;
            for (size_t i = 0; i < n; ++i) {
                int cl = trace.first_layer[i];
                if (cat.assignment[cl] != high_cat) continue;  // low-quality category
                if (cl == top_cluster) {
                    p1_idx.push_back(i);
                } else {
                    p2_idx.push_back(i);
                    p2_dist.push_back(std::abs(c_top - trace.first_centroids[cl]));
                }
            }
            break;
        }
    }

    for (size_t i : p1_idx) dec.p1.push_back(scores[i].dp_id);
    for (size_t i : p2_idx) dec.p2.push_back(scores[i].dp_id);

    // ceil(beta * |P2|) picks, sampled without replacement on entry positions.
    std::vector<size_t> chosen_p2_positions;
    if (!p2_idx.empty() && beta > 0.0) {
        size_t take = static_cast<size_t>(std::ceil(beta * static_cast<double>(p2_idx.size())));
        take = std::min(take, p2_idx.size());
        Rng rng(seed ^ 0xb5c19d3aa0f2e671ull);
        chosen_p2_positions = rng.sample_without_replacement(p2_idx.size(), take);
        std::sort(chosen_p2_positions.begin(), chosen_p2_positions.end());
    }

    double total = 0.0;
    for (size_t i : p1_idx) {
        double w = std::max(0.0, scores[i].score);
        dec.weights[scores[i].dp_id] = w;
        total += w;
    }
    for (size_t pos : chosen_p2_positions) {
        size_t i = p2_idx[pos];
        dec.selected_p2.push_back(scores[i].dp_id);
        double w = std::max(0.0, scores[i].score) / (1.0 + p2_dist[pos]);
        dec.weights[scores[i].dp_id] = w;
        total += w;
    }

    if (dec.weights.empty() || total <= 0.0) {
        // No purchasable models this epoch.
        dec.purchasable = false;
        dec.weights.clear();
        return dec;
    }
    for (auto& [id, w] : dec.weights) w /= total;
    return dec;
}

/// Cohen's kappa of a confusion matrix. A degenerate evaluation set where
/// chance agreement is already 1 carries no information and maps to 0.
inline double kappa(const ConfusionMatrix& cm) {
    const double total = static_cast<double>(cm.total());
    if (total <= 0.0) throw std::invalid_argument("kappa: empty confusion matrix");
    double p_o = static_cast<double>(cm.trace()) / total;
    double p_e = 0.0;
    for (int c = 0; c < cm.num_classes; ++c)
        p_e += (static_cast<double>(cm.row_sum(c)) / total) *
               (static_cast<double>(cm.col_sum(c)) / total);
    if (std::abs(1.0 - p_e) < 1e-12) return 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

struct BaselineState {
    ParamVector baseline_update;    // u_g for the epoch this state feeds
    std::vector<int> preferred_dps;  // kappa-ranked, best first
    int64_t epoch = 0;
};

struct BaselineAdjustment {
    BaselineState state;
    bool kept_previous = false;  // purchased set was empty; previous baseline kept
    std::map<int, double> kappas;
};

/// Rank the purchased updates by Cohen's kappa of (global + update) on the
/// root dataset and keep the top_n ids as preferred DPs. The next epoch's
/// baseline update is the uniform average of the preferred DPs' updates of
/// that epoch; resolving that average is the caller's job.
inline BaselineAdjustment adjust_baseline(const std::map<int, ParamVector>& purchased,
                                          const Dataset& root_data, const LocalModel& global_model,
                                          int top_n, const BaselineState& previous) {
    BaselineAdjustment out;
    if (purchased.empty()) {
        out.state = previous;
        out.kept_previous = true;
        return out;
    }
    if (top_n < 1) throw std::invalid_argument("adjust_baseline: top_n >= 1");

    std::vector<std::pair<double, int>> ranked;  // (-kappa, dp_id) for stable ordering
    for (const auto& [dp, update] : purchased) {
        LocalModel candidate = global_model;
        candidate.weights = add(global_model.weights, update);
        auto [acc, cm] = evaluate(candidate, root_data);
        (void)acc;
        double k = kappa(cm);
        out.kappas[dp] = k;
        ranked.emplace_back(-k, dp);
    }
    std::sort(ranked.begin(), ranked.end());

    out.state.epoch = previous.epoch + 1;
    for (size_t i = 0; i < ranked.size() && static_cast<int>(i) < top_n; ++i)
        out.state.preferred_dps.push_back(ranked[i].second);
    return out;
}

enum class RefAggregator { FedAvg, FLTrust, Krum, Median };

struct RefAggResult {
    ParamVector update;
    std::vector<int> selected;  // indices into the updates list
};

/// Reference aggregation rules used as comparison points.
inline RefAggResult reference_aggregate(RefAggregator method,
                                        const std::vector<ParamVector>& updates,
                                        const std::vector<double>& data_sizes,
                                        const ParamVector* baseline, int f) {
    if (updates.empty()) throw std::invalid_argument("reference_aggregate: no updates");
    const size_t n = updates.size();
    const size_t m = updates[0].size();
    for (const auto& u : updates)
        if (u.size() != m) throw std::invalid_argument("reference_aggregate: dimension mismatch");

    RefAggResult res;
    res.update.assign(m, 0.0);

    switch (method) {
        case RefAggregator::FedAvg: {
            if (data_sizes.size() != n)
                throw std::invalid_argument("reference_aggregate: data_sizes mismatch");
            double total = 0.0;
            for (double s : data_sizes) total += s;
            if (total <= 0.0) throw std::invalid_argument("reference_aggregate: empty data sizes");
            for (size_t i = 0; i < n; ++i) {
                axpy(res.update, data_sizes[i] / total, updates[i]);
                res.selected.push_back(static_cast<int>(i));
            }
            return res;
        }
        case RefAggregator::FLTrust: {
            if (!baseline) throw std::invalid_argument("reference_aggregate: FLTrust needs baseline");
            double ng = norm(*baseline);
            double wsum = 0.0;
            std::vector<double> w(n, 0.0);
            for (size_t i = 0; i < n; ++i) {
                w[i] = std::max(0.0, cosine_score(*baseline, updates[i]));
                wsum += w[i];
            }
            if (wsum <= 0.0) return res;  // nothing trusted; zero update
            for (size_t i = 0; i < n; ++i) {
                if (w[i] <= 0.0) continue;
                double ni = norm(updates[i]);
                if (ni > 0.0) axpy(res.update, (w[i] / wsum) * (ng / ni), updates[i]);
                res.selected.push_back(static_cast<int>(i));
            }
            return res;
        }
        case RefAggregator::Krum: {
            const int closest = static_cast<int>(n) - f - 2;
            if (closest < 1) throw std::invalid_argument("reference_aggregate: Krum needs n-f-2 >= 1");
            std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
            for (size_t i = 0; i < n; ++i)
                for (size_t j = i + 1; j < n; ++j) {
                    double d = 0.0;
                    for (size_t t = 0; t < m; ++t) {
                        double diff = updates[i][t] - updates[j][t];
                        d += diff * diff;
                    }
                    dist[i][j] = dist[j][i] = d;
                }
            size_t best = 0;
            double best_score = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < n; ++i) {
                std::vector<double> row;
                row.reserve(n - 1);
                for (size_t j = 0; j < n; ++j)
                    if (j != i) row.push_back(dist[i][j]);
                std::sort(row.begin(), row.end());
                double score = 0.0;
                for (int t = 0; t < closest; ++t) score += row[t];
                if (score < best_score) {
                    best_score = score;
                    best = i;
                }
            }
            res.update = updates[best];
            res.selected.push_back(static_cast<int>(best));
            return res;
        }
        case RefAggregator::Median: {
            std::vector<double> column(n);
            for (size_t t = 0; t < m; ++t) {
                for (size_t i = 0; i < n; ++i) column[i] = updates[i][t];
                std::sort(column.begin(), column.end());
                res.update[t] = (n % 2 == 1)
                                    ? column[n / 2]
                                    : 0.5 * (column[n / 2 - 1] + column[n / 2]);
            }
            for (size_t i = 0; i < n; ++i) res.selected.push_back(static_cast<int>(i));
            return res;
        }
    }
    throw std::logic_error("reference_aggregate: unreachable");
}

}  // namespace martfl
