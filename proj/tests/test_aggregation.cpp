#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "martfl/aggregation.hpp"

using namespace martfl;

namespace {

ScoreSet make_scores(std::vector<double> values) {
    ScoreSet s;
    for (size_t i = 0; i < values.size(); ++i) s.push_back({static_cast<int>(i), values[i]});
    return s;
}

double weight_sum(const AggregationDecision& d) {
    double sum = 0.0;
    for (const auto& [id, w] : d.weights) sum += w;
    return sum;
}

}  // namespace

TEST_CASE("gathered case selects everyone") {
    auto scores = make_scores({0.90, 0.91, 0.92, 0.915, 0.905});
    auto trace = cluster_scores(scores, 0.05, 7);
    CHECK(trace.kind == DistributionKind::SingleGathered);
    auto dec = select_and_weight(scores, trace, 0.05, 0.1, 7);
    CHECK(dec.p1.size() == 5);
    CHECK(dec.p2.empty());
    CHECK(dec.weights.size() == 5);
    CHECK(weight_sum(dec) == Catch::Approx(1.0).margin(1e-9));
    for (const auto& [id, w] : dec.weights) CHECK(w >= 0.0);
}

TEST_CASE("scattered case keeps the high cluster") {
    // One wide cluster: the second layer must split highs from lows. The
    // exhaustive 2-partition of {0.9, 0.85, 0.1, 0.05} puts the first two
    // together (oracle distortion 2*0.025^2*2), so P1 = {dp0, dp1}.
    auto scores = make_scores({0.9, 0.85, 0.1, 0.05});
    ClusteringTrace trace;
    trace.g_hat = 1;
    trace.first_layer = {0, 0, 0, 0};
    trace.first_centroids = {0.475};
    trace.kind = DistributionKind::SingleScattered;
    auto dec = select_and_weight(scores, trace, 0.05, 0.0, 7);
    CHECK(dec.p1 == std::vector<int>{0, 1});
    CHECK(dec.p2 == std::vector<int>{2, 3});
    CHECK(dec.selected_p2.empty());  // beta = 0
    CHECK(dec.weights.size() == 2);
    CHECK(weight_sum(dec) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("multi case damps qualified non-top clusters") {
    // Three clear clusters; the low one should be discarded, the middle one
    // qualified but damped.
    auto scores = make_scores({0.95, 0.94, 0.93, 0.70, 0.69, 0.68, -0.5, -0.52, -0.48});
    auto trace = cluster_scores(scores, 0.05, 3);
    REQUIRE(trace.kind == DistributionKind::Multi);
    auto dec = select_and_weight(scores, trace, 0.05, 1.0, 3);  // beta=1: take all of P2
    std::vector<int> p1_sorted = dec.p1;
    std::sort(p1_sorted.begin(), p1_sorted.end());
    CHECK(p1_sorted == std::vector<int>{0, 1, 2});
    std::vector<int> p2_sorted = dec.p2;
    std::sort(p2_sorted.begin(), p2_sorted.end());
    CHECK(p2_sorted == std::vector<int>{3, 4, 5});
    CHECK(weight_sum(dec) == Catch::Approx(1.0).margin(1e-9));

    // A damped DP with an equal raw score would weigh strictly less than a
    // top-cluster DP; compare via the raw (unnormalized) formula instead of
    // engineering an exact tie in the data: the damping denominator is > 1.
    double top_c = dec.trace.top_centroid;
    double mid_c = 0.69;
    CHECK(1.0 / (1.0 + std::abs(top_c - mid_c)) < 1.0);
    // And in this decision every selected P2 weight is below every P1 weight.
    for (int p2_id : dec.selected_p2)
        for (int p1_id : dec.p1) CHECK(dec.weights.at(p2_id) < dec.weights.at(p1_id));
}

TEST_CASE("no purchasable models when every score is non-positive") {
    auto scores = make_scores({-0.2, -0.4, -0.3, -0.25});
    auto trace = cluster_scores(scores, 0.05, 9);
    auto dec = select_and_weight(scores, trace, 0.05, 0.1, 9);
    CHECK_FALSE(dec.purchasable);
    CHECK(dec.weights.empty());
}

TEST_CASE("weights sum to one and are non-negative on random score sets") {
    Rng rng(404);
    for (int trial = 0; trial < 60; ++trial) {
        size_t n = 3 + rng.uniform_int(12);
        ScoreSet scores;
        bool any_positive = false;
        for (size_t i = 0; i < n; ++i) {
            double s = rng.uniform(-1.0, 1.0);
            any_positive |= s > 0.0;
            scores.push_back({static_cast<int>(i), s});
        }
        auto trace = cluster_scores(scores, 0.05, trial);
        auto dec = select_and_weight(scores, trace, 0.05, rng.uniform(), trial);
        if (!dec.purchasable) continue;
        CHECK(weight_sum(dec) == Catch::Approx(1.0).margin(1e-9));
        for (const auto& [id, w] : dec.weights) CHECK(w >= 0.0);
        (void)any_positive;
    }
}

TEST_CASE("decision is equivariant under dp_id relabeling") {
    auto scores = make_scores({0.9, 0.8, 0.3, 0.2, -0.1, 0.85});
    auto trace = cluster_scores(scores, 0.05, 21);
    auto dec = select_and_weight(scores, trace, 0.05, 0.5, 21);

    ScoreSet relabeled = scores;
    for (auto& e : relabeled) e.dp_id += 100;  // same order, new ids
    auto trace2 = cluster_scores(relabeled, 0.05, 21);
    auto dec2 = select_and_weight(relabeled, trace2, 0.05, 0.5, 21);

    REQUIRE(dec.weights.size() == dec2.weights.size());
    for (const auto& [id, w] : dec.weights) {
        REQUIRE(dec2.weights.count(id + 100) == 1);
        CHECK(dec2.weights.at(id + 100) == Catch::Approx(w).margin(1e-12));
    }
}

TEST_CASE("kappa oracle values") {
    SECTION("perfect agreement") {
        ConfusionMatrix cm(2);
        cm.at(0, 0) = 10;
        cm.at(1, 1) = 10;
        CHECK(kappa(cm) == Catch::Approx(1.0));
    }
    SECTION("chance agreement") {
        ConfusionMatrix cm(2);
        cm.at(0, 0) = 5;
        cm.at(0, 1) = 5;
        cm.at(1, 0) = 5;
        cm.at(1, 1) = 5;
        CHECK(kappa(cm) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("hand-evaluated Cohen formula") {
        // p_o = (20+15)/50 = 0.7; p_e = (25*30 + 25*20)/50^2 = 0.5; kappa = 0.4.
        ConfusionMatrix cm(2);
        cm.at(0, 0) = 20;
        cm.at(0, 1) = 5;
        cm.at(1, 0) = 10;
        cm.at(1, 1) = 15;
        CHECK(kappa(cm) == Catch::Approx(0.4).margin(1e-12));
    }
    SECTION("degenerate single-cell matrix maps to zero") {
        ConfusionMatrix cm(2);
        cm.at(0, 0) = 10;  // p_e == 1
        CHECK(kappa(cm) == 0.0);
    }
    SECTION("empty matrix rejected") {
        ConfusionMatrix cm(2);
        CHECK_THROWS_AS(kappa(cm), std::invalid_argument);
    }
}

namespace {

struct BaselineFixture {
    SyntheticTask task = SyntheticTask::make(3, 6, 4.0, 0.3, 17);
    Dataset root;
    LocalModel global = LocalModel::zeros(Arch::LinearSoftmax, 6, 3);
    ParamVector good_update;  // trains the global toward the truth
    ParamVector noise_update;

    BaselineFixture() {
        Rng rng(18);
        root = task.sample(120, rng);
        auto trained = train_local(global, root, 300, 0.5, 4);
        good_update = flatten_diff(trained, global.weights);
        noise_update.assign(global.weights.size(), 0.0);
        Rng nrng(77);
        for (auto& x : noise_update) x = nrng.normal() * 0.5;
    }
};

}  // namespace

TEST_CASE("adjust_baseline ranks by kappa") {
    BaselineFixture fx;
    BaselineState prev;

    SECTION("single purchased model is preferred") {
        std::map<int, ParamVector> purchased{{7, fx.good_update}};
        auto adj = adjust_baseline(purchased, fx.root, fx.global, 1, prev);
        CHECK(adj.state.preferred_dps == std::vector<int>{7});
        CHECK_FALSE(adj.kept_previous);
    }
    SECTION("perfect classifier dominates") {
        std::map<int, ParamVector> purchased{{1, fx.noise_update}, {2, fx.good_update}};
        auto adj = adjust_baseline(purchased, fx.root, fx.global, 1, prev);
        CHECK(adj.state.preferred_dps == std::vector<int>{2});
        CHECK(adj.kappas.at(2) > adj.kappas.at(1));
    }
    SECTION("top_n=2 keeps the two best by the kappa oracle") {
        std::map<int, ParamVector> purchased{
            {1, fx.good_update}, {2, scale(fx.good_update, 0.4)}, {3, fx.noise_update}};
        auto adj = adjust_baseline(purchased, fx.root, fx.global, 2, prev);
        REQUIRE(adj.state.preferred_dps.size() == 2);
        // Rank independently from the returned kappas.
        std::vector<std::pair<double, int>> ranked;
        for (auto& [dp, k] : adj.kappas) ranked.emplace_back(-k, dp);
        std::sort(ranked.begin(), ranked.end());
        CHECK(adj.state.preferred_dps[0] == ranked[0].second);
        CHECK(adj.state.preferred_dps[1] == ranked[1].second);
    }
    SECTION("empty purchased set keeps the previous baseline") {
        prev.preferred_dps = {42};
        auto adj = adjust_baseline({}, fx.root, fx.global, 1, prev);
        CHECK(adj.kept_previous);
        CHECK(adj.state.preferred_dps == std::vector<int>{42});
    }
    SECTION("ranking is invariant to map order") {
        std::map<int, ParamVector> a{{1, fx.noise_update}, {2, fx.good_update}};
        std::map<int, ParamVector> b{{2, fx.good_update}, {1, fx.noise_update}};
        CHECK(adjust_baseline(a, fx.root, fx.global, 1, prev).state.preferred_dps ==
              adjust_baseline(b, fx.root, fx.global, 1, prev).state.preferred_dps);
    }
}

TEST_CASE("reference aggregators") {
    SECTION("FedAvg with equal sizes cancels opposite updates") {
        ParamVector u{1.0, -2.0, 3.0};
        auto res = reference_aggregate(RefAggregator::FedAvg, {u, scale(u, -1.0)}, {10, 10},
                                       nullptr, 0);
        for (double x : res.update) CHECK(x == Catch::Approx(0.0).margin(1e-15));
        CHECK(res.selected.size() == 2);
    }
    SECTION("Median per coordinate") {
        auto res = reference_aggregate(RefAggregator::Median,
                                       {{1.0}, {2.0}, {100.0}}, {}, nullptr, 0);
        CHECK(res.update[0] == Catch::Approx(2.0));
    }
    SECTION("Krum never selects the outlier") {
        ParamVector u{1.0, 1.0};
        std::vector<ParamVector> updates{u, u, u, u, {50.0, -50.0}};
        auto res = reference_aggregate(RefAggregator::Krum, updates, {}, nullptr, 1);
        REQUIRE(res.selected.size() == 1);
        CHECK(res.selected[0] != 4);

        // Brute-force Krum score oracle: n - f - 2 = 2 nearest squared distances.
        const int keep = 2;
        std::vector<double> score(5, 0.0);
        for (int i = 0; i < 5; ++i) {
            std::vector<double> d;
            for (int j = 0; j < 5; ++j) {
                if (i == j) continue;
                double dist = 0.0;
                for (int t = 0; t < 2; ++t)
                    dist += (updates[i][t] - updates[j][t]) * (updates[i][t] - updates[j][t]);
                d.push_back(dist);
            }
            std::sort(d.begin(), d.end());
            for (int t = 0; t < keep; ++t) score[i] += d[t];
        }
        int oracle_best = 0;
        for (int i = 1; i < 5; ++i)
            if (score[i] < score[oracle_best]) oracle_best = i;
        CHECK(res.selected[0] == oracle_best);
    }
    SECTION("Krum rejects insufficient n") {
        CHECK_THROWS_AS(reference_aggregate(RefAggregator::Krum, {{1.0}, {2.0}}, {}, nullptr, 1),
                        std::invalid_argument);
    }
    SECTION("FLTrust clips negative cosine and rescales magnitudes") {
        ParamVector baseline{1.0, 0.0};
        std::vector<ParamVector> updates{{2.0, 0.0}, {-1.0, 0.0}, {0.0, 3.0}};
        auto res = reference_aggregate(RefAggregator::FLTrust, updates, {}, &baseline, 0);
        // Weights: max(0, cos) = {1, 0, 0}; scaled by |g|/|u| = 1/2.
        CHECK(res.update[0] == Catch::Approx(1.0));
        CHECK(res.update[1] == Catch::Approx(0.0).margin(1e-15));
        CHECK(res.selected == std::vector<int>{0});
    }
}
