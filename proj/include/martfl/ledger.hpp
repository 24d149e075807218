#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "martfl/bytes.hpp"
#include "martfl/json_util.hpp"
#include "martfl/vdf.hpp"

namespace martfl {

using Tokens = int64_t;

enum class LedgerError {
    None,
    NotDA,
    NotDP,
    UnknownEpoch,
    PrevUnverified,
    WindowClosed,
    WindowOpen,
    DuplicateCommit,
    BadAllocation,
    OutOfOrder,
    DigestMismatch,
    AlreadyVerified,
    NotVerified,
    UnknownCaller,
};

inline const char* ledger_error_name(LedgerError e) {
    switch (e) {
        case LedgerError::None: return "none";
        case LedgerError::NotDA: return "not_da";
        case LedgerError::NotDP: return "not_dp";
        case LedgerError::UnknownEpoch: return "unknown_epoch";
        case LedgerError::PrevUnverified: return "prev_unverified";
        case LedgerError::WindowClosed: return "window_closed";
        case LedgerError::WindowOpen: return "window_open";
        case LedgerError::DuplicateCommit: return "duplicate_commit";
        case LedgerError::BadAllocation: return "bad_allocation";
        case LedgerError::OutOfOrder: return "out_of_order";
        case LedgerError::DigestMismatch: return "digest_mismatch";
        case LedgerError::AlreadyVerified: return "already_verified";
        case LedgerError::NotVerified: return "not_verified";
        case LedgerError::UnknownCaller: return "unknown_caller";
    }
    return "?";
}

struct TxStatus {
    bool ok = false;
    LedgerError error = LedgerError::None;
    static TxStatus success() { return {true, LedgerError::None}; }
    static TxStatus fail(LedgerError e) { return {false, e}; }
};

struct ModelCommit {
    std::string root_hex;
    std::string signature_hex;
};

struct CommittedInputs {
    std::string vk_tag;
    std::string xc_digest_hex;
    std::string proof_digest_hex;
};

/// Snapshot of one marketplace epoch. `is_register_closed` is derived from
/// the snapshot tick, so snapshots are immutable values and flags stay
/// monotone.
struct EpochState {
    int64_t epoch_id = 0;
    Tokens deposit_dp = 0;
    Tokens deposit_da = 0;
    uint64_t delay = 0;
    uint64_t ts = 0;
    std::vector<uint32_t> samples;
    std::map<int, Tokens> amounts;
    std::map<int, ModelCommit> models;
    std::optional<CommittedInputs> inputs;
    bool is_register_closed = false;
    bool is_prepared = false;
    bool is_verified = false;
    bool is_failed = false;
    uint64_t sample_count = 0;  // requested c, recorded at prepare
    // Conservation accounting (exact integers).
    Tokens total_deposited = 0;
    Tokens paid_out = 0;
    Tokens burned = 0;
};

struct LedgerEvent {
    enum class Kind {
        NewEpoch,
        EpochDeposit,
        CommitModel,
        EpochPrepared,
        CommitPublicInputs,
        EpochVerified,
        RewardClaimed,
    };
    Kind kind;
    int64_t epoch_id = 0;
    uint64_t tick = 0;
    uint64_t seq = 0;
    Json payload;
};

inline const char* event_kind_name(LedgerEvent::Kind k) {
    switch (k) {
        case LedgerEvent::Kind::NewEpoch: return "NewEpoch";
        case LedgerEvent::Kind::EpochDeposit: return "EpochDeposit";
        case LedgerEvent::Kind::CommitModel: return "CommitModel";
        case LedgerEvent::Kind::EpochPrepared: return "EpochPrepared";
        case LedgerEvent::Kind::CommitPublicInputs: return "CommitPublicInputs";
        case LedgerEvent::Kind::EpochVerified: return "EpochVerified";
        case LedgerEvent::Kind::RewardClaimed: return "RewardClaimed";
    }
    return "?";
}

inline LedgerEvent::Kind event_kind_from_name(const std::string& name) {
    using K = LedgerEvent::Kind;
    if (name == "NewEpoch") return K::NewEpoch;
    if (name == "EpochDeposit") return K::EpochDeposit;
    if (name == "CommitModel") return K::CommitModel;
    if (name == "EpochPrepared") return K::EpochPrepared;
    if (name == "CommitPublicInputs") return K::CommitPublicInputs;
    if (name == "EpochVerified") return K::EpochVerified;
    if (name == "RewardClaimed") return K::RewardClaimed;
    throw std::invalid_argument("unknown event kind " + name);
}

struct PrepareResult {
    TxStatus status;
    std::map<int, Bytes> nonces;  // commitment roots, the sampling nonce material
    Digest seed{};                // derive_seed(nonces)
    uint64_t c = 0;
};

struct ClaimResult {
    TxStatus status;
    Tokens paid = 0;
};

struct NewEpochResult {
    TxStatus status;
    int64_t epoch_id = -1;
};

/// Deterministic state machine mirroring the trading smart contract: epochs,
/// deposits, model commitment, preparation, input commitment, single-shot
/// verification, reward claims, and the failed-verification penalty. Time is
/// a logical tick counter advanced explicitly by the caller.
class Ledger {
public:
    explicit Ledger(int da_id) : da_id_(da_id) {}

    int data_acquirer() const { return da_id_; }
    uint64_t tick() const { return tick_; }
    void advance_ticks(uint64_t n) { tick_ += n; }
    size_t epoch_count() const { return epochs_.size(); }
    const std::vector<LedgerEvent>& events() const { return log_; }

    NewEpochResult new_epoch(int caller, uint64_t delay, Tokens initial_funds) {
        if (caller != da_id_) return {TxStatus::fail(LedgerError::NotDA), -1};
        if (initial_funds < 0) return {TxStatus::fail(LedgerError::BadAllocation), -1};
        if (!epochs_.empty() && !epochs_.back().is_verified)
            return {TxStatus::fail(LedgerError::PrevUnverified), -1};
        Record e;
        e.epoch_id = static_cast<int64_t>(epochs_.size());
        e.deposit_da = initial_funds / 2;
        e.deposit_dp = initial_funds - e.deposit_da;  // remainder goes to the DP side
        e.total_deposited = initial_funds;
        e.ts = tick_;
        e.delay = delay;
        epochs_.push_back(e);
        Json payload;
        payload["funds"] = initial_funds;
        payload["delay"] = delay;
        emit(LedgerEvent::Kind::NewEpoch, e.epoch_id, payload);
        return {TxStatus::success(), e.epoch_id};
    }

    TxStatus deposit(int caller, int64_t epoch_id, Tokens funds) {
        if (caller != da_id_) return TxStatus::fail(LedgerError::NotDA);
        Record* e = record(epoch_id);
        if (!e) return TxStatus::fail(LedgerError::UnknownEpoch);
        if (funds < 0) return TxStatus::fail(LedgerError::BadAllocation);
        if (window_expired(*e) || e->is_prepared) return TxStatus::fail(LedgerError::WindowClosed);
        e->deposit_da += funds / 2;
        e->deposit_dp += funds - funds / 2;
        e->total_deposited += funds;
        Json payload;
        payload["funds"] = funds;
        emit(LedgerEvent::Kind::EpochDeposit, epoch_id, payload);
        return TxStatus::success();
    }

    TxStatus commit_model(int caller_dp, int64_t epoch_id, const std::string& root_hex,
                          const std::string& signature_hex) {
        if (caller_dp == da_id_) return TxStatus::fail(LedgerError::NotDP);
        Record* e = record(epoch_id);
        if (!e) return TxStatus::fail(LedgerError::UnknownEpoch);
        if (window_expired(*e) || e->is_prepared) return TxStatus::fail(LedgerError::WindowClosed);
        if (e->models.count(caller_dp)) return TxStatus::fail(LedgerError::DuplicateCommit);
        e->models[caller_dp] = ModelCommit{root_hex, signature_hex};
        Json payload;
        payload["dp"] = caller_dp;
        payload["root"] = root_hex;
        payload["signature"] = signature_hex;
        emit(LedgerEvent::Kind::CommitModel, epoch_id, payload);
        return TxStatus::success();
    }

    /// Record the reward allocation (one amount per committed DP, summing
    /// exactly to deposit_dp) and derive the sampling nonces from the
    /// committed roots. Only valid once the registration window has expired.
    PrepareResult prepare(int caller, int64_t epoch_id, const std::vector<int>& dp_list,
                          const std::vector<Tokens>& amount_list, uint64_t c) {
        PrepareResult out;
        if (caller != da_id_) {
            out.status = TxStatus::fail(LedgerError::NotDA);
            return out;
        }
        Record* e = record(epoch_id);
        if (!e) {
            out.status = TxStatus::fail(LedgerError::UnknownEpoch);
            return out;
        }
        if (e->is_prepared) {
            out.status = TxStatus::fail(LedgerError::OutOfOrder);
            return out;
        }
        if (!window_expired(*e)) {
            out.status = TxStatus::fail(LedgerError::WindowOpen);
            return out;
        }
        if (dp_list.size() != amount_list.size() || dp_list.size() != e->models.size()) {
            out.status = TxStatus::fail(LedgerError::BadAllocation);
            return out;
        }
        Tokens sum = 0;
        std::map<int, Tokens> amounts;
        for (size_t i = 0; i < dp_list.size(); ++i) {
            if (amount_list[i] < 0 || !e->models.count(dp_list[i]) || amounts.count(dp_list[i])) {
                out.status = TxStatus::fail(LedgerError::BadAllocation);
                return out;
            }
            amounts[dp_list[i]] = amount_list[i];
            sum += amount_list[i];
        }
        if (sum != e->deposit_dp) {
            out.status = TxStatus::fail(LedgerError::BadAllocation);
            return out;
        }

        e->amounts = std::move(amounts);
        e->is_prepared = true;
        e->sample_count = c;
        for (const auto& [dp, commit] : e->models) out.nonces[dp] = from_hex(commit.root_hex);
        if (!out.nonces.empty()) out.seed = derive_seed(out.nonces);
        out.c = c;
        out.status = TxStatus::success();

        Json payload;
        payload["dp_list"] = dp_list;
        payload["amounts"] = amount_list;
        payload["c"] = c;
        payload["seed"] = to_hex(out.seed);
        emit(LedgerEvent::Kind::EpochPrepared, epoch_id, payload);
        return out;
    }

    TxStatus commit_inputs(int caller, int64_t epoch_id, const std::string& vk_tag,
                           const std::string& xc_digest_hex, const std::string& proof_digest_hex) {
        if (caller != da_id_) return TxStatus::fail(LedgerError::NotDA);
        Record* e = record(epoch_id);
        if (!e) return TxStatus::fail(LedgerError::UnknownEpoch);
        if (!e->is_prepared || e->is_verified) return TxStatus::fail(LedgerError::OutOfOrder);
        e->inputs = CommittedInputs{vk_tag, xc_digest_hex, proof_digest_hex};
        Json payload;
        payload["vk_tag"] = vk_tag;
        payload["xc_digest"] = xc_digest_hex;
        payload["proof_digest"] = proof_digest_hex;
        emit(LedgerEvent::Kind::CommitPublicInputs, epoch_id, payload);
        return TxStatus::success();
    }

    /// Single-shot verification. The presented proof digest must match the
    /// committed one (a mismatch rejects without consuming the attempt); the
    /// verifier callback supplies the actual proof check. On failure the DA
    /// deposit is split equally over the allocated DPs, remainder burned.
    struct VerifyResult {
        TxStatus status;
        bool verified = false;
    };
    VerifyResult verify_aggregation(int caller, int64_t epoch_id,
                                    const std::string& presented_proof_digest_hex,
                                    const std::function<bool()>& run_verifier,
                                    const std::vector<uint32_t>& sampled_indices = {}) {
        (void)caller;  // any party may trigger verification
        VerifyResult out;
        Record* e = record(epoch_id);
        if (!e) {
            out.status = TxStatus::fail(LedgerError::UnknownEpoch);
            return out;
        }
        if (e->is_verified) {
            out.status = TxStatus::fail(LedgerError::AlreadyVerified);
            return out;
        }
        if (!e->inputs) {
            out.status = TxStatus::fail(LedgerError::OutOfOrder);
            return out;
        }
        if (e->inputs->proof_digest_hex != presented_proof_digest_hex) {
            out.status = TxStatus::fail(LedgerError::DigestMismatch);
            return out;
        }

        bool v = run_verifier();
        e->is_verified = true;
        e->samples = sampled_indices;
        if (!v) {
            e->is_failed = true;
            apply_penalty(*e);
        }
        out.status = TxStatus::success();
        out.verified = v;
        Json payload;
        payload["outcome"] = v;
        payload["samples"] = sampled_indices;
        emit(LedgerEvent::Kind::EpochVerified, epoch_id, payload);
        return out;
    }

    ClaimResult claim_reward(int caller, int64_t epoch_id) {
        ClaimResult out;
        Record* e = record(epoch_id);
        if (!e) {
            out.status = TxStatus::fail(LedgerError::UnknownEpoch);
            return out;
        }
        if (!e->is_verified) {
            out.status = TxStatus::fail(LedgerError::NotVerified);
            return out;
        }
        if (caller == da_id_) {
            out.paid = e->deposit_da;  // zero after a failed epoch
            e->deposit_da = 0;
        } else if (e->models.count(caller)) {
            auto it = e->amounts.find(caller);
            out.paid = (it != e->amounts.end()) ? it->second : 0;
            if (it != e->amounts.end()) it->second = 0;
        } else {
            out.status = TxStatus::fail(LedgerError::UnknownCaller);
            return out;
        }
        e->paid_out += out.paid;
        out.status = TxStatus::success();
        if (out.paid > 0) {
            Json payload;
            payload["caller"] = caller;
            payload["paid"] = out.paid;
            emit(LedgerEvent::Kind::RewardClaimed, epoch_id, payload);
        }
        return out;
    }

    std::optional<EpochState> read_epoch(int64_t epoch_id) const {
        const Record* e = record(epoch_id);
        if (!e) return std::nullopt;
        return snapshot(*e);
    }

    /// Exact integer conservation per epoch:
    /// paid_out + burned + deposit_da + unclaimed pool == total_deposited.
    bool conservation_holds(int64_t epoch_id) const {
        const Record* e = record(epoch_id);
        if (!e) return false;
        Tokens pool = 0;
        if (e->is_prepared) {
            for (const auto& [dp, amount] : e->amounts) pool += amount;
        } else {
            pool = e->deposit_dp;
        }
        return e->paid_out + e->burned + e->deposit_da + pool == e->total_deposited;
    }

    Json state_to_json() const {
        Json j;
        j["tick"] = tick_;
        j["da"] = da_id_;
        Json epochs = Json::array();
        for (const auto& e : epochs_) epochs.push_back(epoch_to_json(snapshot(e)));
        j["epochs"] = epochs;
        return j;
    }

    static Json event_to_json(const LedgerEvent& ev) {
        Json j;
        j["kind"] = event_kind_name(ev.kind);
        j["epoch"] = ev.epoch_id;
        j["tick"] = ev.tick;
        j["seq"] = ev.seq;
        j["payload"] = ev.payload;
        return j;
    }

    static LedgerEvent event_from_json(const Json& j) {
        LedgerEvent ev;
        ev.kind = event_kind_from_name(j.at("kind").get<std::string>());
        ev.epoch_id = j.at("epoch").get<int64_t>();
        ev.tick = j.at("tick").get<uint64_t>();
        ev.seq = j.at("seq").get<uint64_t>();
        ev.payload = j.at("payload");
        return ev;
    }

    static Json epoch_to_json(const EpochState& e) {
        Json j;
        j["epoch"] = e.epoch_id;
        j["deposit_dp"] = e.deposit_dp;
        j["deposit_da"] = e.deposit_da;
        j["delay"] = e.delay;
        j["ts"] = e.ts;
        j["samples"] = e.samples;
        Json amounts = Json::object();
        for (const auto& [dp, amount] : e.amounts) amounts[std::to_string(dp)] = amount;
        j["amounts"] = amounts;
        Json models = Json::object();
        for (const auto& [dp, commit] : e.models) {
            Json mc;
            mc["root"] = commit.root_hex;
            mc["signature"] = commit.signature_hex;
            models[std::to_string(dp)] = mc;
        }
        j["models"] = models;
        if (e.inputs) {
            Json in;
            in["vk_tag"] = e.inputs->vk_tag;
            in["xc_digest"] = e.inputs->xc_digest_hex;
            in["proof_digest"] = e.inputs->proof_digest_hex;
            j["inputs"] = in;
        } else {
            j["inputs"] = nullptr;
        }
        j["is_register_closed"] = e.is_register_closed;
        j["is_prepared"] = e.is_prepared;
        j["is_verified"] = e.is_verified;
        j["is_failed"] = e.is_failed;
        j["c"] = e.sample_count;
        j["total_deposited"] = e.total_deposited;
        j["paid_out"] = e.paid_out;
        j["burned"] = e.burned;
        return j;
    }

    /// Rebuild a ledger from its event log. `final_tick` is the tick of the
    /// source ledger at export time (ticks may advance without events).
    static Ledger replay(int da_id, const std::vector<LedgerEvent>& log, uint64_t final_tick) {
        Ledger led(da_id);
        for (const auto& ev : log) {
            led.tick_ = ev.tick;
            Record* e = nullptr;
            if (ev.kind != LedgerEvent::Kind::NewEpoch) {
                e = led.record(ev.epoch_id);
                if (!e) throw std::invalid_argument("replay: event for unknown epoch");
            }
            switch (ev.kind) {
                case LedgerEvent::Kind::NewEpoch: {
                    Record rec;
                    rec.epoch_id = ev.epoch_id;
                    Tokens funds = ev.payload.at("funds").get<Tokens>();
                    rec.deposit_da = funds / 2;
                    rec.deposit_dp = funds - rec.deposit_da;
                    rec.total_deposited = funds;
                    rec.delay = ev.payload.at("delay").get<uint64_t>();
                    rec.ts = ev.tick;
                    led.epochs_.push_back(rec);
                    break;
                }
                case LedgerEvent::Kind::EpochDeposit: {
                    Tokens funds = ev.payload.at("funds").get<Tokens>();
                    e->deposit_da += funds / 2;
                    e->deposit_dp += funds - funds / 2;
                    e->total_deposited += funds;
                    break;
                }
                case LedgerEvent::Kind::CommitModel: {
                    int dp = ev.payload.at("dp").get<int>();
                    e->models[dp] = ModelCommit{ev.payload.at("root").get<std::string>(),
                                                ev.payload.at("signature").get<std::string>()};
                    break;
                }
                case LedgerEvent::Kind::EpochPrepared: {
                    auto dps = ev.payload.at("dp_list").get<std::vector<int>>();
                    auto amounts = ev.payload.at("amounts").get<std::vector<Tokens>>();
                    for (size_t i = 0; i < dps.size(); ++i) e->amounts[dps[i]] = amounts[i];
                    e->sample_count = ev.payload.at("c").get<uint64_t>();
                    e->is_prepared = true;
                    break;
                }
                case LedgerEvent::Kind::CommitPublicInputs: {
                    e->inputs = CommittedInputs{ev.payload.at("vk_tag").get<std::string>(),
                                                ev.payload.at("xc_digest").get<std::string>(),
                                                ev.payload.at("proof_digest").get<std::string>()};
                    break;
                }
                case LedgerEvent::Kind::EpochVerified: {
                    bool outcome = ev.payload.at("outcome").get<bool>();
                    e->is_verified = true;
                    e->samples = ev.payload.at("samples").get<std::vector<uint32_t>>();
                    if (!outcome) {
                        e->is_failed = true;
                        led.apply_penalty(*e);
                    }
                    break;
                }
                case LedgerEvent::Kind::RewardClaimed: {
                    int caller = ev.payload.at("caller").get<int>();
                    Tokens paid = ev.payload.at("paid").get<Tokens>();
                    if (caller == da_id) {
                        e->deposit_da -= paid;
                    } else {
                        e->amounts[caller] -= paid;
                    }
                    e->paid_out += paid;
                    break;
                }
            }
            led.log_.push_back(ev);
            led.seq_ = ev.seq + 1;
        }
        led.tick_ = final_tick;
        return led;
    }

private:
    struct Record {
        int64_t epoch_id = 0;
        Tokens deposit_dp = 0;
        Tokens deposit_da = 0;
        uint64_t delay = 0;
        uint64_t ts = 0;
        std::vector<uint32_t> samples;
        std::map<int, Tokens> amounts;
        std::map<int, ModelCommit> models;
        std::optional<CommittedInputs> inputs;
        bool is_prepared = false;
        bool is_verified = false;
        bool is_failed = false;
        uint64_t sample_count = 0;
        Tokens total_deposited = 0;
        Tokens paid_out = 0;
        Tokens burned = 0;
    };

    bool window_expired(const Record& e) const { return tick_ - e.ts > e.delay; }

    void apply_penalty(Record& e) {
        if (e.amounts.empty()) {
            e.burned += e.deposit_da;
            e.deposit_da = 0;
            return;
        }
        Tokens share = e.deposit_da / static_cast<Tokens>(e.amounts.size());
        Tokens distributed = 0;
        for (auto& [dp, amount] : e.amounts) {
            amount += share;
            distributed += share;
        }
        e.burned += e.deposit_da - distributed;
        e.deposit_da = 0;
    }

    EpochState snapshot(const Record& e) const {
        EpochState s;
        s.epoch_id = e.epoch_id;
        s.deposit_dp = e.deposit_dp;
        s.deposit_da = e.deposit_da;
        s.delay = e.delay;
        s.ts = e.ts;
        s.samples = e.samples;
        s.amounts = e.amounts;
        s.models = e.models;
        s.inputs = e.inputs;
        s.is_register_closed = window_expired(e) || e.is_prepared;
        s.is_prepared = e.is_prepared;
        s.is_verified = e.is_verified;
        s.is_failed = e.is_failed;
        s.sample_count = e.sample_count;
        s.total_deposited = e.total_deposited;
        s.paid_out = e.paid_out;
        s.burned = e.burned;
        return s;
    }

    Record* record(int64_t epoch_id) {
        if (epoch_id < 0 || static_cast<size_t>(epoch_id) >= epochs_.size()) return nullptr;
        return &epochs_[static_cast<size_t>(epoch_id)];
    }
    const Record* record(int64_t epoch_id) const {
        if (epoch_id < 0 || static_cast<size_t>(epoch_id) >= epochs_.size()) return nullptr;
        return &epochs_[static_cast<size_t>(epoch_id)];
    }

    void emit(LedgerEvent::Kind kind, int64_t epoch_id, Json payload) {
        LedgerEvent ev;
        ev.kind = kind;
        ev.epoch_id = epoch_id;
        ev.tick = tick_;
        ev.seq = seq_++;
        ev.payload = std::move(payload);
        log_.push_back(std::move(ev));
    }

    int da_id_;
    uint64_t tick_ = 0;
    uint64_t seq_ = 0;
    std::vector<Record> epochs_;
    std::vector<LedgerEvent> log_;
};

}  // namespace martfl
