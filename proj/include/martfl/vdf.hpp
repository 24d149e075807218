#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "martfl/bytes.hpp"

namespace martfl {

/// Checkpoint proof for the iterated-hash delay chain. Verification recomputes
/// every segment, which is embarrassingly parallel while evaluation is forced
/// to be sequential. This is a practical delay chain, not a formally verified
/// delay function.
struct VdfProof {
    uint64_t difficulty = 0;
    uint64_t segment_len = 0;
    std::vector<Digest> checkpoints;  // chain states at segment boundaries, final state last
};

/// x_0 = H(seed), x_{i+1} = H(x_i); output = x_difficulty.
inline std::pair<Digest, VdfProof> vdf_eval(const Bytes& seed, uint64_t difficulty,
                                            uint64_t checkpoint_count = 16) {
    checkpoint_count = std::max<uint64_t>(1, checkpoint_count);
    VdfProof proof;
    proof.difficulty = difficulty;
    proof.segment_len =
        (difficulty == 0) ? 1 : std::max<uint64_t>(1, (difficulty + checkpoint_count - 1) / checkpoint_count);

    Digest state = sha256(seed);
    proof.checkpoints.push_back(state);
    for (uint64_t i = 1; i <= difficulty; ++i) {
        state = sha256(state.data(), state.size());
        if (i % proof.segment_len == 0 || i == difficulty) proof.checkpoints.push_back(state);
    }
    return {state, proof};
}

inline bool vdf_verify(const Bytes& seed, uint64_t difficulty, const Digest& output,
                       const VdfProof& proof) {
    if (proof.difficulty != difficulty || proof.checkpoints.empty()) return false;
    if (proof.segment_len == 0) return false;
    if (proof.checkpoints.front() != sha256(seed)) return false;
    if (proof.checkpoints.back() != output) return false;

    uint64_t expected = 1;  // x_0
    if (difficulty > 0) expected += (difficulty - 1) / proof.segment_len + 1;
    if (proof.checkpoints.size() != expected) return false;  // truncated or padded list

    uint64_t position = 0;
    for (size_t seg = 1; seg < proof.checkpoints.size(); ++seg) {
        uint64_t next_position = std::min<uint64_t>(position + proof.segment_len, difficulty);
        if (seg + 1 == proof.checkpoints.size()) next_position = difficulty;
        Digest state = proof.checkpoints[seg - 1];
        for (uint64_t i = position; i < next_position; ++i)
            state = sha256(state.data(), state.size());
        if (state != proof.checkpoints[seg]) return false;
        position = next_position;
    }
    return position == difficulty;
}

/// Seed for the sampling VDF: SHA-256 over the DPs' nonces, length-prefixed
/// and concatenated in ascending dp_id order, so submission order is
/// irrelevant while every nonce matters.
inline Digest derive_seed(const std::map<int, Bytes>& nonces_by_dp) {
    if (nonces_by_dp.empty()) throw std::invalid_argument("derive_seed: no nonces");
    Bytes buf;
    for (const auto& [dp, nonce] : nonces_by_dp) {
        (void)dp;
        append_u32be(buf, static_cast<uint32_t>(nonce.size()));
        append_bytes(buf, nonce.data(), nonce.size());
    }
    return sha256(buf);
}

/// min(c, m) distinct indices in [0, m), drawn from a counter-mode hash
/// stream over the VDF output with rejection sampling, sorted ascending.
inline std::vector<uint32_t> sample_indices(const Digest& vdf_output, uint64_t m, uint64_t c) {
    if (m == 0) throw std::invalid_argument("sample_indices: m >= 1");
    const uint64_t want = std::min(c, m);
    std::vector<uint32_t> out;
    if (want == 0) return out;
    if (want == m) {
        out.resize(m);
        for (uint64_t i = 0; i < m; ++i) out[i] = static_cast<uint32_t>(i);
        return out;
    }

    std::unordered_set<uint32_t> seen;
    out.reserve(want);
    const uint64_t reject_bound = (~uint64_t{0} / m) * m;  // unbiased draw region
    Bytes block(vdf_output.begin(), vdf_output.end());
    block.resize(vdf_output.size() + 8);
    uint64_t counter = 0;
    while (out.size() < want) {
        for (int b = 0; b < 8; ++b)
            block[vdf_output.size() + b] = static_cast<uint8_t>(counter >> (56 - 8 * b));
        ++counter;
        Digest d = sha256(block);
        for (int w = 0; w < 4 && out.size() < want; ++w) {
            uint64_t v = 0;
            for (int b = 0; b < 8; ++b) v = (v << 8) | d[w * 8 + b];
            if (v >= reject_bound) continue;
            uint32_t idx = static_cast<uint32_t>(v % m);
            if (seen.insert(idx).second) out.push_back(idx);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace martfl
