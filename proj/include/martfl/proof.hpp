#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "martfl/bytes.hpp"
#include "martfl/circuit.hpp"
#include "martfl/commitment.hpp"
#include "martfl/json_util.hpp"
#include "martfl/merkle.hpp"
#include "martfl/quant.hpp"
#include "martfl/vdf.hpp"

namespace martfl {

/// Everything needed to re-derive the sampled column set: per-DP nonces, the
/// VDF run seeded by their hash, and the resulting indices.
struct SamplingTranscript {
    std::map<int, Bytes> nonces;
    Digest seed{};
    uint64_t difficulty = 0;
    Digest vdf_output{};
    VdfProof vdf_proof;
    uint64_t m = 0;
    uint64_t c = 0;
    std::vector<uint32_t> indices;

    static SamplingTranscript create(const std::map<int, Bytes>& nonces, uint64_t m, uint64_t c,
                                     uint64_t difficulty) {
        SamplingTranscript t;
        t.nonces = nonces;
        t.seed = derive_seed(nonces);
        t.difficulty = difficulty;
        t.m = m;
        t.c = c;
        auto [output, proof] = vdf_eval(Bytes(t.seed.begin(), t.seed.end()), difficulty);
        t.vdf_output = output;
        t.vdf_proof = proof;
        t.indices = sample_indices(output, m, c);
        return t;
    }

    bool verify() const {
        if (nonces.empty() || m == 0) return false;
        if (derive_seed(nonces) != seed) return false;
        if (!vdf_verify(Bytes(seed.begin(), seed.end()), difficulty, vdf_output, vdf_proof))
            return false;
        return indices == sample_indices(vdf_output, m, c);
    }
};

struct LeafOpening {
    uint32_t index = 0;
    uint32_t value = 0;  // quantized parameter
    LeafBlind blind{};
    std::vector<Digest> path;
};

/// Public inputs of the proof: quantized global-model columns at the sampled
/// indices, the full committed weight vector, and every quantization
/// parameter needed to re-derive the integer circuit constants.
struct ProofPublicInputs {
    std::vector<uint32_t> wg_cols;
    std::vector<uint32_t> wg_prev_cols;
    std::vector<uint32_t> kq;
    QuantParams k_params, u_params, u_out_params, w_prev_params, w_out_params;
    int eta = 22;
};

struct AggregationProof {
    int64_t epoch = 0;
    std::string backend = "commit-and-open";
    ProofPublicInputs xc;
    std::vector<int> dp_order;  // aligned with openings rows and kq entries
    std::vector<std::vector<LeafOpening>> openings;  // [dp][sampled column]
    SamplingTranscript transcript;
};

/// Setup/Prove/Verify lifecycle keys. The commit-and-open backend needs no
/// trusted parameters, so both keys are empty placeholders; a zk backend slot
/// would carry real material under the same interface.
struct ProvingKeys {
    std::string backend;
    Bytes pk, vk;

    static ProvingKeys setup(const std::string& backend = "commit-and-open") {
        if (backend != "commit-and-open")
            throw std::invalid_argument("ProvingKeys: unknown backend " + backend);
        return ProvingKeys{backend, {}, {}};
    }
};

struct ProverWitness {
    std::vector<int> dp_ids;
    std::vector<QuantTensor> u_rows;  // one 1 x m quantized update per DP
    std::vector<Salt> salts;
};

/// Build the commit-and-open proof: per-DP Merkle openings at the sampled
/// columns plus the sampling transcript and public inputs.
inline AggregationProof prove(const ProofPublicInputs& xc, const ProverWitness& witness,
                              const std::map<int, UpdateCommitment>& commitments,
                              const ProvingKeys& keys, const SamplingTranscript& transcript) {
    if (keys.backend != "commit-and-open")
        throw std::invalid_argument("prove: unsupported backend");
    if (!transcript.verify()) throw std::invalid_argument("prove: invalid sampling transcript");
    if (witness.dp_ids.size() != witness.u_rows.size() ||
        witness.dp_ids.size() != witness.salts.size() || witness.dp_ids.empty())
        throw std::invalid_argument("prove: witness shape mismatch");
    if (xc.kq.size() != witness.dp_ids.size())
        throw std::invalid_argument("prove: K does not match witness rows");
    if (xc.wg_cols.size() != transcript.indices.size() ||
        xc.wg_prev_cols.size() != transcript.indices.size())
        throw std::invalid_argument("prove: public columns do not match sample count");

    AggregationProof proof;
    proof.backend = keys.backend;
    proof.xc = xc;
    proof.dp_order = witness.dp_ids;
    proof.transcript = transcript;

    for (size_t row = 0; row < witness.dp_ids.size(); ++row) {
        int dp = witness.dp_ids[row];
        if (!commitments.count(dp))
            throw std::invalid_argument("prove: missing commitment for dp " + std::to_string(dp));
        const QuantTensor& u = witness.u_rows[row];
        if (u.rows != 1 || u.cols != transcript.m)
            throw std::invalid_argument("prove: witness row dimension mismatch");
        const Salt& salt = witness.salts[row];

        std::vector<Digest> leaves;
        leaves.reserve(u.cols);
        for (size_t i = 0; i < u.cols; ++i)
            leaves.push_back(MerkleTree::hash_leaf(static_cast<uint32_t>(i), u.q[i],
                                                   MerkleTree::leaf_blind(salt, i)));

        std::vector<LeafOpening> row_openings;
        row_openings.reserve(transcript.indices.size());
        for (uint32_t idx : transcript.indices) {
            LeafOpening open;
            open.index = idx;
            open.value = u.q[idx];
            open.blind = MerkleTree::leaf_blind(salt, idx);
            open.path = MerkleTree::path(leaves, idx);
            row_openings.push_back(std::move(open));
        }
        proof.openings.push_back(std::move(row_openings));
    }
    return proof;
}

/// Public verification. Returns false (never throws) on any structural or
/// arithmetic mismatch:
///  (i)   the sampling transcript replays,
///  (ii)  every opening's Merkle path matches the DP's committed root,
///  (iii) the aggregation and update identities hold exactly at every sampled
///        column using the committed weights and public W columns,
///  (iv)  the proof's public K equals the committed K bit-exactly.
inline bool verify(const ProvingKeys& keys, const AggregationProof& proof,
                   const std::map<int, Digest>& committed_roots,
                   const std::vector<uint32_t>& committed_kq) {
    try {
        if (keys.backend != proof.backend || proof.backend != "commit-and-open") return false;
        if (!proof.transcript.verify()) return false;

        const size_t n = proof.dp_order.size();
        const size_t c = proof.transcript.indices.size();
        if (proof.openings.size() != n || proof.xc.kq.size() != n || n == 0) return false;
        if (proof.xc.wg_cols.size() != c || proof.xc.wg_prev_cols.size() != c) return false;
        if (proof.xc.kq != committed_kq) return false;

        for (size_t row = 0; row < n; ++row) {
            auto it = committed_roots.find(proof.dp_order[row]);
            if (it == committed_roots.end()) return false;
            if (proof.openings[row].size() != c) return false;
            for (size_t t = 0; t < c; ++t) {
                const LeafOpening& open = proof.openings[row][t];
                if (open.index != proof.transcript.indices[t]) return false;
                Digest leaf = MerkleTree::hash_leaf(open.index, open.value, open.blind);
                if (!MerkleTree::verify_path(leaf, open.index, proof.transcript.m, open.path,
                                             it->second))
                    return false;
            }
        }

        AggScales agg = AggScales::derive(proof.xc.k_params, proof.xc.u_params,
                                          proof.xc.u_out_params, proof.xc.eta);
        UpdScales upd = UpdScales::derive(proof.xc.w_prev_params, proof.xc.u_out_params,
                                          proof.xc.w_out_params, proof.xc.eta);
        std::vector<uint32_t> u_col(n);
        for (size_t t = 0; t < c; ++t) {
            for (size_t row = 0; row < n; ++row) u_col[row] = proof.openings[row][t].value;
            AggColumn acol = aggregate_column(committed_kq, u_col, agg, t);
            UpdColumn ucol = update_column(proof.xc.wg_prev_cols[t], acol.q, upd, t);
            if (acol.saturated || ucol.saturated) return false;
            if (ucol.q != proof.xc.wg_cols[t]) return false;
        }
        return true;
    } catch (...) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// Canonical JSON envelope (hex digests, decimal integers). Field order is
// fixed, so serialization is byte-identical across runs and suitable for
// ledger storage and replay.

inline Json quant_params_to_json(const QuantParams& p) {
    Json j;
    j["a"] = double_to_string(p.a);
    j["b"] = double_to_string(p.b);
    j["eps"] = double_to_string(p.eps);
    j["a_q"] = p.a_q;
    j["b_q"] = p.b_q;
    j["bits"] = p.bits;
    j["s"] = double_to_string(p.s);
    j["z"] = double_to_string(p.z);
    return j;
}

inline QuantParams quant_params_from_json(const Json& j) {
    QuantParams p;
    p.a = double_from_string(j.at("a").get<std::string>());
    p.b = double_from_string(j.at("b").get<std::string>());
    p.eps = double_from_string(j.at("eps").get<std::string>());
    p.a_q = j.at("a_q").get<uint32_t>();
    p.b_q = j.at("b_q").get<uint32_t>();
    p.bits = j.at("bits").get<int>();
    p.s = double_from_string(j.at("s").get<std::string>());
    p.z = double_from_string(j.at("z").get<std::string>());
    return p;
}

inline Json transcript_to_json(const SamplingTranscript& t) {
    Json j;
    Json nonces = Json::object();
    for (const auto& [dp, nonce] : t.nonces) nonces[std::to_string(dp)] = to_hex(nonce);
    j["nonces"] = nonces;
    j["seed"] = to_hex(t.seed);
    j["difficulty"] = t.difficulty;
    j["vdf_output"] = to_hex(t.vdf_output);
    j["vdf_segment_len"] = t.vdf_proof.segment_len;
    Json cps = Json::array();
    for (const auto& cp : t.vdf_proof.checkpoints) cps.push_back(to_hex(cp));
    j["vdf_checkpoints"] = cps;
    j["m"] = t.m;
    j["c"] = t.c;
    j["indices"] = t.indices;
    return j;
}

inline SamplingTranscript transcript_from_json(const Json& j) {
    SamplingTranscript t;
    for (const auto& [key, value] : j.at("nonces").items())
        t.nonces[std::stoi(key)] = from_hex(value.get<std::string>());
    t.seed = digest_from_hex(j.at("seed").get<std::string>());
    t.difficulty = j.at("difficulty").get<uint64_t>();
    t.vdf_output = digest_from_hex(j.at("vdf_output").get<std::string>());
    t.vdf_proof.difficulty = t.difficulty;
    t.vdf_proof.segment_len = j.at("vdf_segment_len").get<uint64_t>();
    for (const auto& cp : j.at("vdf_checkpoints"))
        t.vdf_proof.checkpoints.push_back(digest_from_hex(cp.get<std::string>()));
    t.m = j.at("m").get<uint64_t>();
    t.c = j.at("c").get<uint64_t>();
    t.indices = j.at("indices").get<std::vector<uint32_t>>();
    return t;
}

inline Json proof_to_json(const AggregationProof& p) {
    Json j;
    j["epoch"] = p.epoch;
    j["backend"] = p.backend;
    Json xc;
    xc["wg_cols"] = p.xc.wg_cols;
    xc["wg_prev_cols"] = p.xc.wg_prev_cols;
    xc["kq"] = p.xc.kq;
    xc["k_params"] = quant_params_to_json(p.xc.k_params);
    xc["u_params"] = quant_params_to_json(p.xc.u_params);
    xc["u_out_params"] = quant_params_to_json(p.xc.u_out_params);
    xc["w_prev_params"] = quant_params_to_json(p.xc.w_prev_params);
    xc["w_out_params"] = quant_params_to_json(p.xc.w_out_params);
    xc["eta"] = p.xc.eta;
    j["xc"] = xc;
    j["dp_order"] = p.dp_order;
    Json openings = Json::array();
    for (const auto& row : p.openings) {
        Json row_j = Json::array();
        for (const auto& open : row) {
            Json o;
            o["index"] = open.index;
            o["value"] = open.value;
            o["blind"] = to_hex(open.blind.data(), open.blind.size());
            Json path = Json::array();
            for (const auto& d : open.path) path.push_back(to_hex(d));
            o["path"] = path;
            row_j.push_back(o);
        }
        openings.push_back(row_j);
    }
    j["openings"] = openings;
    j["transcript"] = transcript_to_json(p.transcript);
    return j;
}

inline AggregationProof proof_from_json(const Json& j) {
    AggregationProof p;
    p.epoch = j.at("epoch").get<int64_t>();
    p.backend = j.at("backend").get<std::string>();
    const Json& xc = j.at("xc");
    p.xc.wg_cols = xc.at("wg_cols").get<std::vector<uint32_t>>();
    p.xc.wg_prev_cols = xc.at("wg_prev_cols").get<std::vector<uint32_t>>();
    p.xc.kq = xc.at("kq").get<std::vector<uint32_t>>();
    p.xc.k_params = quant_params_from_json(xc.at("k_params"));
    p.xc.u_params = quant_params_from_json(xc.at("u_params"));
    p.xc.u_out_params = quant_params_from_json(xc.at("u_out_params"));
    p.xc.w_prev_params = quant_params_from_json(xc.at("w_prev_params"));
    p.xc.w_out_params = quant_params_from_json(xc.at("w_out_params"));
    p.xc.eta = xc.at("eta").get<int>();
    p.dp_order = j.at("dp_order").get<std::vector<int>>();
    for (const auto& row_j : j.at("openings")) {
        std::vector<LeafOpening> row;
        for (const auto& o : row_j) {
            LeafOpening open;
            open.index = o.at("index").get<uint32_t>();
            open.value = o.at("value").get<uint32_t>();
            Bytes blind = from_hex(o.at("blind").get<std::string>());
            if (blind.size() != open.blind.size()) throw std::invalid_argument("bad blind size");
            std::copy(blind.begin(), blind.end(), open.blind.begin());
            for (const auto& d : o.at("path")) open.path.push_back(digest_from_hex(d.get<std::string>()));
            row.push_back(std::move(open));
        }
        p.openings.push_back(std::move(row));
    }
    p.transcript = transcript_from_json(j.at("transcript"));
    return p;
}

inline std::string proof_to_string(const AggregationProof& p) { return proof_to_json(p).dump(); }

inline Digest proof_digest(const AggregationProof& p) { return sha256(proof_to_string(p)); }

inline Digest public_inputs_digest(const ProofPublicInputs& xc) {
    AggregationProof tmp;
    tmp.xc = xc;
    Json j = proof_to_json(tmp).at("xc");
    return sha256(j.dump());
}

}  // namespace martfl
