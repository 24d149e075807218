#pragma once

#include <cstring>
#include <stdexcept>
#include <vector>

#include "martfl/circuit.hpp"
#include "martfl/commitment.hpp"
#include "martfl/merkle.hpp"
#include "martfl/proof.hpp"

namespace martfl {

enum class ConstraintKind { PublicBinding, MerklePath, MulAcc, AggIdentity, UpdIdentity };

/// Rank-1-style constraint system over the sampled columns. Constraint counts
/// follow H*n*c (commitment) + n*c (aggregation products) + c + c (the two
/// identities) + public-input bindings, independent of the model dimension m.
struct ConstraintSystem {
    size_t n = 0;         // number of DPs
    size_t c = 0;         // sampled columns
    uint64_t m = 0;       // model dimension (tree size only)
    int eta = 22;
    AggScales agg;
    UpdScales upd;
    std::vector<uint32_t> indices;
    std::vector<uint32_t> public_kq;
    std::vector<uint32_t> wg_cols;
    std::vector<uint32_t> wg_prev_cols;
    std::vector<Digest> roots;  // aligned with witness rows

    /// Fixed constraint weight of one hash invocation in the commitment
    /// circuit; plays the role of H in the count formulas.
    static constexpr size_t kHashWeight = 256;

    size_t count(ConstraintKind kind) const {
        switch (kind) {
            case ConstraintKind::PublicBinding: return n + 2 * c;
            case ConstraintKind::MerklePath: return n * c;
            case ConstraintKind::MulAcc: return n * c;
            case ConstraintKind::AggIdentity: return c;
            case ConstraintKind::UpdIdentity: return c;
        }
        return 0;
    }

    size_t total_weighted() const {
        return kHashWeight * count(ConstraintKind::MerklePath) + count(ConstraintKind::MulAcc) +
               count(ConstraintKind::AggIdentity) + count(ConstraintKind::UpdIdentity) +
               count(ConstraintKind::PublicBinding);
    }

    size_t merkle_depth() const {
        size_t depth = 0;
        for (uint64_t level = m; level > 1; level = (level + 1) / 2) ++depth;
        return depth;
    }
};

inline ConstraintSystem build_constraints(const ProofPublicInputs& xc,
                                          const std::vector<UpdateCommitment>& commitments,
                                          int eta, const std::vector<uint32_t>& indices,
                                          uint64_t m) {
    for (uint32_t idx : indices)
        if (idx >= m) throw std::invalid_argument("build_constraints: index out of range");
    if (xc.wg_cols.size() != indices.size() || xc.wg_prev_cols.size() != indices.size())
        throw std::invalid_argument("build_constraints: public columns mismatch");
    if (xc.kq.size() != commitments.size())
        throw std::invalid_argument("build_constraints: K size mismatch");

    ConstraintSystem cs;
    cs.n = commitments.size();
    cs.c = indices.size();
    cs.m = m;
    cs.eta = eta;
    cs.agg = AggScales::derive(xc.k_params, xc.u_params, xc.u_out_params, eta);
    cs.upd = UpdScales::derive(xc.w_prev_params, xc.u_out_params, xc.w_out_params, eta);
    cs.indices = indices;
    cs.public_kq = xc.kq;
    cs.wg_cols = xc.wg_cols;
    cs.wg_prev_cols = xc.wg_prev_cols;
    for (const auto& cmt : commitments) cs.roots.push_back(cmt.root);
    return cs;
}

/// Private witness slots of the constraint system.
struct CircuitWitness {
    std::vector<std::vector<LeafOpening>> openings;  // n rows x c sampled leaves
    std::vector<uint32_t> kq;                        // n
    std::vector<uint32_t> u_agg;                     // c: U'^q at sampled columns
    std::vector<uint64_t> r_a;                       // c
    std::vector<uint8_t> neg_a;                      // c sign-flag slots
    std::vector<uint64_t> r_u;                       // c
    std::vector<uint8_t> neg_u;                      // c

    Bytes serialize() const {
        Bytes out;
        auto put_u32 = [&out](uint32_t v) { append_u32be(out, v); };
        for (uint32_t v : kq) put_u32(v);
        for (const auto& row : openings) {
            for (const auto& open : row) {
                put_u32(open.index);
                put_u32(open.value);
                append_bytes(out, open.blind.data(), open.blind.size());
                for (const auto& d : open.path) append_bytes(out, d.data(), d.size());
            }
        }
        for (uint32_t v : u_agg) put_u32(v);
        for (uint64_t v : r_a) append_u64be(out, v);
        for (uint8_t v : neg_a) out.push_back(v);
        for (uint64_t v : r_u) append_u64be(out, v);
        for (uint8_t v : neg_u) out.push_back(v);
        return out;
    }

    static CircuitWitness deserialize(const Bytes& data, const ConstraintSystem& cs) {
        CircuitWitness w;
        size_t pos = 0;
        auto need = [&](size_t bytes) {
            if (pos + bytes > data.size())
                throw std::invalid_argument("CircuitWitness: truncated serialization");
        };
        auto get_u32 = [&]() {
            need(4);
            uint32_t v = (uint32_t(data[pos]) << 24) | (uint32_t(data[pos + 1]) << 16) |
                         (uint32_t(data[pos + 2]) << 8) | uint32_t(data[pos + 3]);
            pos += 4;
            return v;
        };
        auto get_u64 = [&]() {
            uint64_t hi = get_u32();
            return (hi << 32) | get_u32();
        };
        const size_t depth = cs.merkle_depth();
        for (size_t i = 0; i < cs.n; ++i) w.kq.push_back(get_u32());
        w.openings.resize(cs.n);
        for (size_t row = 0; row < cs.n; ++row) {
            for (size_t t = 0; t < cs.c; ++t) {
                LeafOpening open;
                open.index = get_u32();
                open.value = get_u32();
                need(open.blind.size());
                std::memcpy(open.blind.data(), data.data() + pos, open.blind.size());
                pos += open.blind.size();
                for (size_t d = 0; d < depth; ++d) {
                    Digest dg;
                    need(dg.size());
                    std::memcpy(dg.data(), data.data() + pos, dg.size());
                    pos += dg.size();
                    open.path.push_back(dg);
                }
                w.openings[row].push_back(std::move(open));
            }
        }
        for (size_t t = 0; t < cs.c; ++t) w.u_agg.push_back(get_u32());
        for (size_t t = 0; t < cs.c; ++t) w.r_a.push_back(get_u64());
        for (size_t t = 0; t < cs.c; ++t) {
            need(1);
            w.neg_a.push_back(data[pos++]);
        }
        for (size_t t = 0; t < cs.c; ++t) w.r_u.push_back(get_u64());
        for (size_t t = 0; t < cs.c; ++t) {
            need(1);
            w.neg_u.push_back(data[pos++]);
        }
        if (pos != data.size()) throw std::invalid_argument("CircuitWitness: trailing bytes");
        return w;
    }
};

/// Build the honest witness from full prover-side data.
inline CircuitWitness make_witness(const ConstraintSystem& cs, const ProverWitness& prover) {
    if (prover.u_rows.size() != cs.n) throw std::invalid_argument("make_witness: row mismatch");
    CircuitWitness w;
    w.kq = cs.public_kq;
    for (size_t row = 0; row < cs.n; ++row) {
        const QuantTensor& u = prover.u_rows[row];
        std::vector<Digest> leaves;
        leaves.reserve(u.cols);
        for (size_t i = 0; i < u.cols; ++i)
            leaves.push_back(MerkleTree::hash_leaf(static_cast<uint32_t>(i), u.q[i],
                                                   MerkleTree::leaf_blind(prover.salts[row], i)));
        std::vector<LeafOpening> row_open;
        for (uint32_t idx : cs.indices) {
            LeafOpening open;
            open.index = idx;
            open.value = u.q[idx];
            open.blind = MerkleTree::leaf_blind(prover.salts[row], idx);
            open.path = MerkleTree::path(leaves, idx);
            row_open.push_back(std::move(open));
        }
        w.openings.push_back(std::move(row_open));
    }
    std::vector<uint32_t> u_col(cs.n);
    for (size_t t = 0; t < cs.c; ++t) {
        for (size_t row = 0; row < cs.n; ++row) u_col[row] = w.openings[row][t].value;
        AggColumn acol = aggregate_column(w.kq, u_col, cs.agg, t);
        w.u_agg.push_back(acol.q);
        w.r_a.push_back(acol.remainder);
        w.neg_a.push_back(acol.negative ? 1 : 0);
        UpdColumn ucol = update_column(cs.wg_prev_cols[t], acol.q, cs.upd, t);
        w.r_u.push_back(ucol.remainder);
        w.neg_u.push_back(ucol.negative ? 1 : 0);
    }
    return w;
}

/// True iff every constraint is satisfied over the integers. Throws only on
/// witness-layout mismatch; value violations return false.
inline bool check_witness(const ConstraintSystem& cs, const CircuitWitness& w) {
    const size_t depth = cs.merkle_depth();
    if (w.kq.size() != cs.n || w.openings.size() != cs.n)
        throw std::invalid_argument("check_witness: witness layout mismatch");
    for (const auto& row : w.openings) {
        if (row.size() != cs.c) throw std::invalid_argument("check_witness: witness layout mismatch");
        for (const auto& open : row)
            if (open.path.size() != depth)
                throw std::invalid_argument("check_witness: witness layout mismatch");
    }
    if (w.u_agg.size() != cs.c || w.r_a.size() != cs.c || w.neg_a.size() != cs.c ||
        w.r_u.size() != cs.c || w.neg_u.size() != cs.c)
        throw std::invalid_argument("check_witness: witness layout mismatch");

    // Public-input bindings.
    if (w.kq != cs.public_kq) return false;

    // Commitment circuit: each opened leaf hashes into its committed path.
    for (size_t row = 0; row < cs.n; ++row) {
        for (size_t t = 0; t < cs.c; ++t) {
            const LeafOpening& open = w.openings[row][t];
            if (open.index != cs.indices[t]) return false;
            Digest leaf = MerkleTree::hash_leaf(open.index, open.value, open.blind);
            if (!MerkleTree::verify_path(leaf, open.index, cs.m, open.path, cs.roots[row]))
                return false;
        }
    }

    // Aggregation and update identities per sampled column.
    std::vector<uint32_t> u_col(cs.n);
    for (size_t t = 0; t < cs.c; ++t) {
        for (size_t row = 0; row < cs.n; ++row) u_col[row] = w.openings[row][t].value;
        if (!aggregate_identity_holds(w.kq, u_col, w.u_agg[t], w.r_a[t], w.neg_a[t] != 0, cs.agg))
            return false;
        if (!update_identity_holds(cs.wg_prev_cols[t], w.u_agg[t], cs.wg_cols[t], w.r_u[t],
                                   w.neg_u[t] != 0, cs.upd))
            return false;
    }
    return true;
}

}  // namespace martfl
