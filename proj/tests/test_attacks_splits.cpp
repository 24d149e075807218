#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "martfl/attacks.hpp"
#include "martfl/model.hpp"
#include "martfl/splits.hpp"

using namespace martfl;

TEST_CASE("sign_randomizing preserves magnitudes") {
    Rng rng(3);
    ParamVector u(200);
    for (auto& x : u) x = rng.normal();
    auto out = sign_randomizing(u, 99);
    REQUIRE(out.size() == u.size());
    for (size_t i = 0; i < u.size(); ++i) CHECK(std::abs(out[i]) == Catch::Approx(std::abs(u[i])));
    CHECK(sign_randomizing(u, 99) == out);  // deterministic
}

TEST_CASE("sign_randomizing on a zero update stays zero") {
    ParamVector zero(16, 0.0);
    CHECK(sign_randomizing(zero, 5) == zero);
}

TEST_CASE("sign flips concentrate around one half") {
    Rng rng(4);
    ParamVector u(10000);
    for (auto& x : u) x = 1.0 + rng.uniform();  // all positive
    auto out = sign_randomizing(u, 1234);
    size_t flipped = 0;
    for (size_t i = 0; i < u.size(); ++i) flipped += out[i] < 0.0;
    double fraction = static_cast<double>(flipped) / u.size();
    CHECK(fraction >= 0.47);
    CHECK(fraction <= 0.53);
}

TEST_CASE("free_rider is the global difference") {
    ParamVector g1{1.0, 2.0, 3.0};
    SECTION("identical globals give zero") {
        CHECK(free_rider(g1, g1) == ParamVector(3, 0.0));
    }
    SECTION("unit difference") {
        ParamVector g2 = g1;
        g2[1] -= 1.0;
        auto out = free_rider(g1, g2);
        CHECK(out == ParamVector{0.0, 1.0, 0.0});
    }
    SECTION("random pair matches element-wise subtraction") {
        Rng rng(7);
        ParamVector a(32), b(32);
        for (auto& x : a) x = rng.normal();
        for (auto& x : b) x = rng.normal();
        auto out = free_rider(a, b);
        for (size_t i = 0; i < 32; ++i) CHECK(out[i] == a[i] - b[i]);
    }
}

TEST_CASE("label_flip swaps exactly the two classes") {
    SyntheticTask task = SyntheticTask::make(4, 6, 3.0, 0.5, 10);
    Rng rng(11);
    auto data = task.sample(200, rng);
    std::map<int, int> before;
    for (const auto& s : data) ++before[s.label];

    auto flipped = label_flip(data, 1, 3);
    std::map<int, int> after;
    for (const auto& s : flipped) ++after[s.label];
    CHECK(after[1] == before[3]);
    CHECK(after[3] == before[1]);
    CHECK(after[0] == before[0]);
    CHECK(after[2] == before[2]);
    // Features untouched.
    for (size_t i = 0; i < data.size(); ++i) CHECK(flipped[i].x == data[i].x);
    // Involution.
    auto twice = label_flip(flipped, 1, 3);
    for (size_t i = 0; i < data.size(); ++i) CHECK(twice[i].label == data[i].label);

    SECTION("set without the classes is unchanged") {
        Dataset only0;
        for (const auto& s : data)
            if (s.label == 0) only0.push_back(s);
        auto out = label_flip(only0, 1, 3);
        for (size_t i = 0; i < only0.size(); ++i) CHECK(out[i].label == only0[i].label);
    }
    SECTION("invalid pair rejected") {
        CHECK_THROWS_AS(label_flip(data, 2, 2), std::invalid_argument);
    }
}

TEST_CASE("backdoor_poison plants the trigger") {
    SyntheticTask task = SyntheticTask::make(4, 8, 4.0, 0.4, 20);
    Rng rng(21);
    auto data = task.sample(200, rng);
    BackdoorTrigger trigger;
    trigger.target_class = 2;

    auto res = backdoor_poison(data, trigger, 0.25, 0.95, 31);
    CHECK(res.poisoned_count == 50);
    size_t triggered = 0;
    for (size_t i = 0; i < res.data.size(); ++i) {
        bool is_poisoned = res.sample_weights[i] == 0.95;
        if (is_poisoned) {
            ++triggered;
            CHECK(res.data[i].label == 2);
            for (int d = 0; d < trigger.trigger_dims; ++d)
                CHECK(res.data[i].x[d] == trigger.trigger_value);
            // Non-masked features unchanged.
            for (size_t d = trigger.trigger_dims; d < res.data[i].x.size(); ++d)
                CHECK(res.data[i].x[d] == data[i].x[d]);
        } else {
            CHECK(res.data[i].x == data[i].x);
        }
    }
    CHECK(triggered == 50);
    CHECK_THROWS_AS(backdoor_poison({}, trigger, 0.5, 0.95, 1), std::invalid_argument);
}

TEST_CASE("heavily poisoned training reaches high attack success") {
    SyntheticTask task = SyntheticTask::make(4, 8, 4.0, 0.4, 40);
    Rng rng(41);
    auto train = task.sample(600, rng);
    auto test = task.sample(300, rng);
    BackdoorTrigger trigger;
    trigger.target_class = 1;

    auto poisoned = backdoor_poison(train, trigger, 0.5, 0.95, 42);
    auto model = LocalModel::zeros(Arch::LinearSoftmax, 8, 4);
    TrainOptions opts;
    opts.sample_weights = poisoned.sample_weights;
    auto trained = train_local(model, poisoned.data, 600, 0.5, 43, opts);

    auto triggered_test = apply_trigger(test, trigger);
    size_t hits = 0;
    for (const auto& s : triggered_test) hits += trained.predict(s.x) == trigger.target_class;
    double asr = static_cast<double>(hits) / triggered_test.size();
    CHECK(asr >= 0.9);
}

TEST_CASE("sybil_clone") {
    ParamVector base{1.0, -2.0, 0.5};
    SECTION("singleton") { CHECK(sybil_clone(base, 1).size() == 1); }
    SECTION("clones are identical") {
        auto clones = sybil_clone(base, 5);
        REQUIRE(clones.size() == 5);
        for (const auto& c : clones) CHECK(c == base);
    }
    SECTION("count must be positive") {
        CHECK_THROWS_AS(sybil_clone(base, 0), std::invalid_argument);
    }
}

TEST_CASE("UNI split gives equal sizes") {
    SyntheticTask task = SyntheticTask::make(4, 6, 3.0, 0.5, 50);
    SplitSpec spec;
    spec.split = SplitKind::UNI;
    spec.total_samples = 1000;
    auto res = split_data(task, 10, spec, 7);
    REQUIRE(res.dp_data.size() == 10);
    for (const auto& d : res.dp_data) CHECK(d.size() == 100);
}

TEST_CASE("POW split is strictly decreasing and conserves the total") {
    SyntheticTask task = SyntheticTask::make(4, 6, 3.0, 0.5, 51);
    SplitSpec spec;
    spec.split = SplitKind::POW;
    spec.total_samples = 1000;
    auto res = split_data(task, 10, spec, 8);
    size_t total = 0;
    for (size_t i = 0; i < res.sizes.size(); ++i) {
        total += res.sizes[i];
        if (i > 0) CHECK(res.sizes[i] < res.sizes[i - 1]);
        CHECK(res.dp_data[i].size() == res.sizes[i]);
    }
    CHECK(total == 1000);

    // Direct power-law allocation oracle: floor(total * w_i / W) never exceeds
    // the assigned size except through the remainder going to DP 0.
    double wsum = 0.0;
    std::vector<double> w(10);
    for (int i = 0; i < 10; ++i) {
        w[i] = std::pow(static_cast<double>(i + 1), -1.2);
        wsum += w[i];
    }
    for (int i = 1; i < 10; ++i) {
        size_t floor_alloc = static_cast<size_t>(std::floor(1000.0 * w[i] / wsum));
        CHECK(res.sizes[i] <= floor_alloc);
        CHECK(res.sizes[i] + 1 >= floor_alloc);
    }
}

TEST_CASE("TypeI bias dominates the root with half the classes") {
    SyntheticTask task = SyntheticTask::make(4, 6, 3.0, 0.5, 52);
    SplitSpec spec;
    spec.bias = BiasScenario::TypeI;
    spec.distribution = DistKind::NonIID;
    spec.biased_fraction = 0.5;
    spec.total_samples = 4000;
    spec.root_fraction = 0.02;
    auto res = split_data(task, 8, spec, 9);

    REQUIRE(res.root_half.size() == 2);
    size_t dominant = 0;
    for (const auto& s : res.root)
        for (int c : res.root_half) dominant += s.label == c;
    CHECK(static_cast<double>(dominant) / res.root.size() >= 0.8);

    // TypeI biased DPs sample only the root's half.
    for (int i = 0; i < 8; ++i) {
        if (!res.biased[i]) continue;
        for (const auto& s : res.dp_data[i]) {
            bool in_half = false;
            for (int c : res.root_half) in_half |= s.label == c;
            CHECK(in_half);
        }
    }
}

TEST_CASE("split rejects an over-subscribed budget") {
    SyntheticTask task = SyntheticTask::make(4, 6, 3.0, 0.5, 53);
    SplitSpec spec;
    spec.total_samples = 5;
    CHECK_THROWS_AS(split_data(task, 10, spec, 1), std::invalid_argument);
}

TEST_CASE("splits are deterministic") {
    SyntheticTask task = SyntheticTask::make(4, 6, 3.0, 0.5, 54);
    SplitSpec spec;
    spec.split = SplitKind::POW;
    spec.distribution = DistKind::NonIID;
    spec.bias = BiasScenario::TypeII;
    spec.biased_fraction = 0.4;
    spec.total_samples = 2000;
    auto a = split_data(task, 6, spec, 77);
    auto b = split_data(task, 6, spec, 77);
    CHECK(a.sizes == b.sizes);
    for (int i = 0; i < 6; ++i) {
        REQUIRE(a.dp_data[i].size() == b.dp_data[i].size());
        for (size_t s = 0; s < a.dp_data[i].size(); ++s) {
            CHECK(a.dp_data[i][s].label == b.dp_data[i][s].label);
            CHECK(a.dp_data[i][s].x == b.dp_data[i][s].x);
        }
    }
}
