#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "martfl/clustering.hpp"
#include "martfl/rng.hpp"

using namespace martfl;

namespace {

// Optimal 1-D k-means by exhaustive search over contiguous partitions of the
// sorted data (optimal 1-D clusters are intervals). Independent of Lloyd.
double optimal_distortion(std::vector<double> xs, int k) {
    std::sort(xs.begin(), xs.end());
    const int n = static_cast<int>(xs.size());
    std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + xs[i];
        prefix_sq[i + 1] = prefix_sq[i] + xs[i] * xs[i];
    }
    auto seg_cost = [&](int lo, int hi) {  // [lo, hi)
        double cnt = hi - lo;
        double sum = prefix[hi] - prefix[lo];
        double sq = prefix_sq[hi] - prefix_sq[lo];
        return sq - sum * sum / cnt;
    };
    std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, 1e300));
    dp[0][0] = 0.0;
    for (int clusters = 1; clusters <= k; ++clusters)
        for (int end = clusters; end <= n; ++end)
            for (int start = clusters - 1; start < end; ++start)
                dp[clusters][end] =
                    std::min(dp[clusters][end], dp[clusters - 1][start] + seg_cost(start, end));
    return dp[k][n];
}

// Independent gap-statistic evaluation mirroring the documented recipe but
// with exhaustive k-means and its own reference stream.
int oracle_gap_ghat(const std::vector<double>& xs, int k_max, int B, uint64_t seed) {
    double lo = *std::min_element(xs.begin(), xs.end());
    double hi = *std::max_element(xs.begin(), xs.end());
    Rng rng(seed);
    std::vector<std::vector<double>> refs(B);
    for (int b = 0; b < B; ++b) {
        refs[b].resize(xs.size());
        for (double& v : refs[b]) v = rng.uniform(lo, hi);
    }
    auto logw = [](double w) { return std::log(std::max(w, 1e-12)); };
    std::vector<double> gap(k_max + 1), sk(k_max + 1);
    for (int k = 1; k <= k_max; ++k) {
        double lw = logw(optimal_distortion(xs, k));
        double mean = 0.0;
        std::vector<double> lref(B);
        for (int b = 0; b < B; ++b) {
            lref[b] = logw(optimal_distortion(refs[b], k));
            mean += lref[b];
        }
        mean /= B;
        double var = 0.0;
        for (int b = 0; b < B; ++b) var += (lref[b] - mean) * (lref[b] - mean);
        gap[k] = mean - lw;
        sk[k] = std::sqrt(var / B) * std::sqrt(1.0 + 1.0 / B);
    }
    for (int k = 1; k < k_max; ++k)
        if (gap[k] >= gap[k + 1] - sk[k + 1]) return k;
    return k_max;
}

}  // namespace

TEST_CASE("kmeans k=1 gives the mean") {
    std::vector<double> xs{0.1, 0.4, 0.7};
    auto res = kmeans_scores(xs, 1, 0);
    CHECK(res.centroids.size() == 1);
    CHECK(res.centroids[0] == Catch::Approx(0.4));
}

TEST_CASE("kmeans k=n gives zero distortion") {
    std::vector<double> xs{0.05, 0.2, 0.55, 0.9};
    auto res = kmeans_scores(xs, 4, 0);
    CHECK(res.distortion == Catch::Approx(0.0).margin(1e-12));
    std::vector<int> seen = res.assignment;
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("kmeans recovers the optimal 2-partition") {
    std::vector<double> xs{0.1, 0.2, 0.8, 0.9};
    auto res = kmeans_scores(xs, 2, 0);
    // Exhaustive 1-D partition search is the oracle.
    CHECK(res.distortion == Catch::Approx(optimal_distortion(xs, 2)).margin(1e-12));
    CHECK(res.assignment[0] == res.assignment[1]);
    CHECK(res.assignment[2] == res.assignment[3]);
    CHECK(res.assignment[0] != res.assignment[2]);
}

TEST_CASE("kmeans rejects k out of range") {
    std::vector<double> xs{0.1, 0.2};
    CHECK_THROWS_AS(kmeans_scores(xs, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_scores(xs, 0, 0), std::invalid_argument);
}

TEST_CASE("kmeans clusters are never empty") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> xs(10);
        for (auto& x : xs) x = rng.uniform(-1.0, 1.0);
        // Duplicates stress the empty-cluster refill.
        xs[3] = xs[4] = xs[5];
        int k = 1 + static_cast<int>(rng.uniform_int(10));
        auto res = kmeans_scores(xs, k, 0);
        std::vector<int> count(k, 0);
        for (int a : res.assignment) ++count[a];
        for (int j = 0; j < k; ++j) CHECK(count[j] > 0);
    }
}

TEST_CASE("gap statistic: identical scores give one cluster") {
    std::vector<double> xs(6, 0.42);
    CHECK(estimate_cluster_count(xs, 4, 10, 7) == 1);
}

TEST_CASE("gap statistic: single score gives one cluster") {
    CHECK(estimate_cluster_count({0.3}, 4, 10, 7) == 1);
}

TEST_CASE("gap statistic: two well-separated groups give two clusters") {
    std::vector<double> xs{0.01, 0.02, 0.03, 0.91, 0.92, 0.93};
    int ghat = estimate_cluster_count(xs, 4, 10, 7);
    CHECK(ghat == 2);
    CHECK(oracle_gap_ghat(xs, 4, 10, 1234) == 2);
}

TEST_CASE("gap statistic rejects empty input") {
    CHECK_THROWS_AS(estimate_cluster_count({}, 4, 10, 7), std::invalid_argument);
}

TEST_CASE("gap statistic is deterministic per seed") {
    Rng rng(5);
    std::vector<double> xs(12);
    for (auto& x : xs) x = rng.uniform(-1.0, 1.0);
    int a = estimate_cluster_count(xs, 10, 10, 99);
    int b = estimate_cluster_count(xs, 10, 10, 99);
    CHECK(a == b);
    auto ka = kmeans_scores(xs, a, 99);
    auto kb = kmeans_scores(xs, a, 99);
    CHECK(ka.assignment == kb.assignment);
    CHECK(ka.centroids == kb.centroids);
}

TEST_CASE("classify_distribution cases") {
    // Range below the published threshold T = 0.05.
    CHECK(classify_distribution(1, 0.03, 0.05) == DistributionKind::SingleGathered);
    CHECK(classify_distribution(1, 0.40, 0.05) == DistributionKind::SingleScattered);
    CHECK(classify_distribution(3, 0.40, 0.05) == DistributionKind::Multi);
    CHECK_THROWS_AS(classify_distribution(1, 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("classify_distribution is monotone in T") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        double range = rng.uniform(0.0, 1.0);
        double t1 = rng.uniform(0.001, 1.0);
        double t2 = t1 + rng.uniform(0.0, 1.0);
        auto k1 = classify_distribution(1, range, t1);
        auto k2 = classify_distribution(1, range, t2);
        if (k1 == DistributionKind::SingleGathered) CHECK(k2 == DistributionKind::SingleGathered);
    }
}
