#pragma once

#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "martfl/bytes.hpp"
#include "martfl/core.hpp"
#include "martfl/rng.hpp"

namespace martfl {

/// Opaque sealed container moving between DA and DP during scoring. The
/// payload has no public accessor: each side may only transform messages
/// through the backend's allowed algebra, which mirrors the trust boundaries
/// of the homomorphic dataflow without lattice cryptography.
class ScoreChannelMessage {
public:
    enum class Direction { BaselineOut, ResponseIn };

    Direction direction() const { return direction_; }
    const std::string& backend_tag() const { return backend_tag_; }
    size_t payload_size() const { return payload_.size(); }

private:
    friend class PlaintextEquivalentBackend;
    ScoreChannelMessage(Direction dir, std::string tag, Bytes payload)
        : direction_(dir), backend_tag_(std::move(tag)), payload_(std::move(payload)) {}

    Direction direction_;
    std::string backend_tag_;
    Bytes payload_;
};

class ScoreBackend {
public:
    virtual ~ScoreBackend() = default;
    virtual std::string tag() const = 0;
    virtual double tolerance() const = 0;

    /// DA side: normalize and seal the baseline update.
    virtual ScoreChannelMessage seal_baseline(const ParamVector& u_g) = 0;
    /// DP side: normalize the local update, element-multiply against the
    /// sealed baseline and sum. Only the resulting scalar leaves the DP.
    virtual ScoreChannelMessage respond(const ScoreChannelMessage& baseline,
                                        const ParamVector& u_i) = 0;
    /// DA side: decode the sealed cosine.
    virtual double decode_score(const ScoreChannelMessage& response) = 0;
};

/// Plaintext-equivalent backend: payloads are sealed with a session keystream
/// held by the backend instance, which stands in for the homomorphic algebra.
class PlaintextEquivalentBackend final : public ScoreBackend {
public:
    explicit PlaintextEquivalentBackend(uint64_t session_seed = 0x5ea1) {
        Rng rng(session_seed);
        for (auto& b : key_) b = static_cast<uint8_t>(rng.uniform_int(256));
    }

    std::string tag() const override { return "plaintext-equivalent"; }
    double tolerance() const override { return 1e-6; }

    ScoreChannelMessage seal_baseline(const ParamVector& u_g) override {
        double n = norm(u_g);
        if (n == 0.0) throw std::invalid_argument("seal_baseline: zero baseline");
        Bytes plain(u_g.size() * sizeof(double));
        for (size_t i = 0; i < u_g.size(); ++i) {
            double v = u_g[i] / n;
            std::memcpy(plain.data() + i * sizeof(double), &v, sizeof(double));
        }
        return ScoreChannelMessage(ScoreChannelMessage::Direction::BaselineOut, tag(),
                                   seal(plain));
    }

    ScoreChannelMessage respond(const ScoreChannelMessage& baseline,
                                const ParamVector& u_i) override {
        if (baseline.backend_tag() != tag() ||
            baseline.direction() != ScoreChannelMessage::Direction::BaselineOut)
            throw std::invalid_argument("respond: not a baseline message for this backend");
        Bytes plain = unseal(baseline.payload_);
        if (plain.size() != u_i.size() * sizeof(double))
            throw std::invalid_argument("respond: dimension mismatch");
        double ni = norm(u_i);
        double score = 0.0;
        if (ni > 0.0) {
            for (size_t i = 0; i < u_i.size(); ++i) {
                double g;
                std::memcpy(&g, plain.data() + i * sizeof(double), sizeof(double));
                score += g * (u_i[i] / ni);
            }
        }
        Bytes out(sizeof(double));
        std::memcpy(out.data(), &score, sizeof(double));
        return ScoreChannelMessage(ScoreChannelMessage::Direction::ResponseIn, tag(), seal(out));
    }

    double decode_score(const ScoreChannelMessage& response) override {
        if (response.backend_tag() != tag() ||
            response.direction() != ScoreChannelMessage::Direction::ResponseIn)
            throw std::invalid_argument("decode_score: not a response for this backend");
        Bytes plain = unseal(response.payload_);
        if (plain.size() != sizeof(double))
            throw std::invalid_argument("decode_score: malformed response");
        double score;
        std::memcpy(&score, plain.data(), sizeof(double));
        return score;
    }

private:
    Bytes seal(const Bytes& plain) const {
        Bytes out = plain;
        Bytes block_input(key_.begin(), key_.end());
        block_input.resize(key_.size() + 8);
        for (size_t i = 0; i < out.size(); i += 32) {
            uint64_t counter = i / 32;
            for (int b = 0; b < 8; ++b)
                block_input[key_.size() + b] = static_cast<uint8_t>(counter >> (56 - 8 * b));
            Digest ks = sha256(block_input);
            for (size_t j = 0; j < 32 && i + j < out.size(); ++j) out[i + j] ^= ks[j];
        }
        return out;
    }
    Bytes unseal(const Bytes& sealed) const { return seal(sealed); }  // XOR stream

    std::array<uint8_t, 32> key_{};
};

struct ScoreExchangeRecord {
    ScoreChannelMessage::Direction direction;
    size_t payload_size;
};
using ScoreExchangeTranscript = std::vector<ScoreExchangeRecord>;

/// Two-message scoring session for one DP. The DA-side view of the exchange
/// contains nothing derived from u_i except the final decoded scalar.
inline double score_exchange(const ParamVector& u_g, const ParamVector& u_i,
                             ScoreBackend& backend,
                             ScoreExchangeTranscript* transcript = nullptr) {
    ScoreChannelMessage baseline = backend.seal_baseline(u_g);
    if (transcript)
        transcript->push_back({baseline.direction(), baseline.payload_size()});
    ScoreChannelMessage response = backend.respond(baseline, u_i);
    if (transcript)
        transcript->push_back({response.direction(), response.payload_size()});
    return backend.decode_score(response);
}

}  // namespace martfl
