#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "martfl/bytes.hpp"
#include "martfl/core.hpp"
#include "martfl/merkle.hpp"
#include "martfl/quant.hpp"

namespace martfl {

using Salt = std::array<uint8_t, 16>;

/// A DP's binding commitment to its model update: a Merkle root over
/// per-parameter leaves of the quantized values. Committing to the quantized
/// value lets the same root back both the scoring stage and the proof
/// openings.
struct UpdateCommitment {
    Digest root{};
    int dp_id = 0;
    int64_t epoch = 0;
    Salt opening_salt{};
};

inline std::vector<Digest> commitment_leaves(const ParamVector& u, const Salt& salt,
                                             const QuantParams& quant) {
    std::vector<Digest> leaves;
    leaves.reserve(u.size());
    for (size_t i = 0; i < u.size(); ++i) {
        uint32_t q = quant.quantize_one(u[i]);
        leaves.push_back(
            MerkleTree::hash_leaf(static_cast<uint32_t>(i), q, MerkleTree::leaf_blind(salt, i)));
    }
    return leaves;
}

inline UpdateCommitment commit_update(const ParamVector& u, const Salt& salt,
                                      const QuantParams& quant, int dp_id = 0, int64_t epoch = 0) {
    if (u.empty()) throw std::invalid_argument("commit_update: empty update");
    if (!all_finite(u)) throw std::invalid_argument("commit_update: non-finite update");
    UpdateCommitment c;
    c.root = MerkleTree::root(commitment_leaves(u, salt, quant));
    c.dp_id = dp_id;
    c.epoch = epoch;
    c.opening_salt = salt;
    return c;
}

inline bool verify_opening(const UpdateCommitment& c, const ParamVector& u, const Salt& salt,
                           const QuantParams& quant) {
    if (u.empty() || !all_finite(u)) return false;
    return MerkleTree::root(commitment_leaves(u, salt, quant)) == c.root;
}

}  // namespace martfl
