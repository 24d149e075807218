#include <catch2/catch_amalgamated.hpp>

#include "martfl/commitment.hpp"
#include "martfl/scoring_channel.hpp"

using namespace martfl;

namespace {

Salt make_salt(uint8_t fill) {
    Salt s{};
    s.fill(fill);
    return s;
}

}  // namespace

TEST_CASE("commit_update is deterministic") {
    QuantParams qp = QuantParams::derive(-1.0, 1.0, 0.01, 8);
    ParamVector u{0.1, -0.5, 0.9, 0.0};
    Salt salt = make_salt(7);
    auto a = commit_update(u, salt, qp, 3, 1);
    auto b = commit_update(u, salt, qp, 3, 1);
    CHECK(a.root == b.root);
    CHECK(a.dp_id == 3);
    CHECK(a.epoch == 1);
}

TEST_CASE("one-quantum flip changes the root") {
    QuantParams qp = QuantParams::derive(-1.0, 1.0, 0.01, 8);
    ParamVector u{0.1, -0.5, 0.9, 0.0};
    Salt salt = make_salt(9);
    auto base = commit_update(u, salt, qp);
    ParamVector flipped = u;
    flipped[2] += qp.s;  // exactly one quantum
    REQUIRE(qp.quantize_one(flipped[2]) != qp.quantize_one(u[2]));
    CHECK(commit_update(flipped, salt, qp).root != base.root);
}

TEST_CASE("root matches a hand-built two-level tree") {
    QuantParams qp = QuantParams::derive(-1.0, 1.0, 0.01, 8);
    ParamVector u{0.25, -0.25, 0.75, -0.75};
    Salt salt = make_salt(0x42);

    // Independent reconstruction of the documented convention:
    // leaf_i = H(be32(i) || be32(q_i) || first16(H(salt || be32(i)))),
    // inner = H(left || right).
    auto leaf = [&](uint32_t i) {
        Bytes prf_in(salt.begin(), salt.end());
        append_u32be(prf_in, i);
        Digest prf = sha256(prf_in);
        Bytes buf;
        append_u32be(buf, i);
        append_u32be(buf, qp.quantize_one(u[i]));
        buf.insert(buf.end(), prf.begin(), prf.begin() + 16);
        return sha256(buf);
    };
    auto inner = [](const Digest& l, const Digest& r) {
        Bytes buf(l.begin(), l.end());
        buf.insert(buf.end(), r.begin(), r.end());
        return sha256(buf);
    };
    Digest expected = inner(inner(leaf(0), leaf(1)), inner(leaf(2), leaf(3)));

    CHECK(commit_update(u, salt, qp).root == expected);
}

TEST_CASE("verify_opening") {
    QuantParams qp = QuantParams::derive(-1.0, 1.0, 0.01, 8);
    ParamVector u{0.3, 0.1, -0.7, 0.5, 0.0};
    Salt salt = make_salt(0x11);
    auto c = commit_update(u, salt, qp);

    SECTION("honest reopen") { CHECK(verify_opening(c, u, salt, qp)); }
    SECTION("perturbed coordinate") {
        ParamVector bad = u;
        bad[1] += 3 * qp.s;
        CHECK_FALSE(verify_opening(c, bad, salt, qp));
    }
    SECTION("wrong salt") { CHECK_FALSE(verify_opening(c, u, make_salt(0x12), qp)); }
}

TEST_CASE("binding fuzz over single-coordinate perturbations") {
    QuantParams qp = QuantParams::derive(-1.0, 1.0, 0.01, 8);
    Rng rng(808);
    ParamVector u(32);
    for (auto& x : u) x = rng.uniform(-0.9, 0.9);
    Salt salt = make_salt(0x33);
    auto c = commit_update(u, salt, qp);
    int failures = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        ParamVector bad = u;
        size_t idx = rng.uniform_int(u.size());
        // Shift by at least one quantum so the quantized leaf actually changes.
        double shift = qp.s * (1.0 + rng.uniform_int(5));
        bad[idx] += (rng.next() & 1) ? shift : -shift;
        if (!verify_opening(c, bad, salt, qp)) ++failures;
    }
    CHECK(failures == trials);
}

TEST_CASE("score_exchange equals plain cosine") {
    PlaintextEquivalentBackend backend(1234);
    SECTION("identical vectors") {
        ParamVector u{0.5, -0.25, 1.5};
        CHECK(score_exchange(u, u, backend) == Catch::Approx(1.0).margin(1e-6));
    }
    SECTION("orthogonal pair") {
        CHECK(score_exchange({1.0, 0.0}, {0.0, 2.0}, backend) ==
              Catch::Approx(0.0).margin(1e-6));
    }
    SECTION("random pairs stay within the backend tolerance") {
        Rng rng(55);
        for (int t = 0; t < 50; ++t) {
            ParamVector g(24), i(24);
            for (auto& x : g) x = rng.normal();
            for (auto& x : i) x = rng.normal();
            double via_channel = score_exchange(g, i, backend);
            CHECK(std::abs(via_channel - cosine_score(g, i)) <= backend.tolerance());
        }
    }
}

TEST_CASE("score_exchange rejects a zero baseline") {
    PlaintextEquivalentBackend backend;
    CHECK_THROWS_AS(score_exchange({0.0, 0.0}, {1.0, 2.0}, backend), std::invalid_argument);
}

TEST_CASE("exchange transcript shape: two messages, scalar response") {
    PlaintextEquivalentBackend backend(99);
    ParamVector g{1.0, 2.0, 3.0, 4.0};
    ParamVector i{0.5, 0.5, -0.5, 0.25};
    ScoreExchangeTranscript transcript;
    score_exchange(g, i, backend, &transcript);
    REQUIRE(transcript.size() == 2);
    CHECK(transcript[0].direction == ScoreChannelMessage::Direction::BaselineOut);
    CHECK(transcript[1].direction == ScoreChannelMessage::Direction::ResponseIn);
    // The only thing returned to the DA is one sealed scalar.
    CHECK(transcript[1].payload_size == sizeof(double));
    CHECK(transcript[0].payload_size == g.size() * sizeof(double));
}
