#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "martfl/core.hpp"
#include "martfl/rng.hpp"
#include "martfl/task.hpp"

namespace martfl {

enum class AttackKind { None, SignRandomizing, FreeRider, LabelFlip, Backdoor, Sybil };

inline const char* attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::None: return "none";
        case AttackKind::SignRandomizing: return "sign_randomizing";
        case AttackKind::FreeRider: return "free_rider";
        case AttackKind::LabelFlip: return "label_flip";
        case AttackKind::Backdoor: return "backdoor";
        case AttackKind::Sybil: return "sybil";
    }
    return "?";
}

inline AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "none") return AttackKind::None;
    if (name == "sign_randomizing") return AttackKind::SignRandomizing;
    if (name == "free_rider") return AttackKind::FreeRider;
    if (name == "label_flip") return AttackKind::LabelFlip;
    if (name == "backdoor") return AttackKind::Backdoor;
    if (name == "sybil") return AttackKind::Sybil;
    throw std::invalid_argument("unknown attack kind " + name);
}

struct BackdoorTrigger {
    int trigger_dims = 3;       // first d_t feature coordinates are overwritten
    double trigger_value = 4.0;  // constant pattern
    int target_class = 0;
};

struct AdversarySpec {
    AttackKind kind = AttackKind::None;
    int flip_class_a = 0;  // label-flip pair
    int flip_class_b = 1;
    BackdoorTrigger trigger;
    double backdoor_alpha = 0.95;    // attack-objective blend weight
    double poison_fraction = 0.5;
    int sybil_count = 1;
    uint64_t seed = 0;
};

/// Keep each coordinate's magnitude, redraw its sign as a fair coin.
inline ParamVector sign_randomizing(const ParamVector& honest_update, uint64_t seed) {
    Rng rng(seed);
    ParamVector out(honest_update.size());
    for (size_t i = 0; i < out.size(); ++i) {
        double mag = std::abs(honest_update[i]);
        out[i] = (rng.next() & 1) ? mag : -mag;
    }
    return out;
}

/// Delta-weight free rider: the difference of the two last published global
/// models, independent of any local data.
inline ParamVector free_rider(const ParamVector& global_t1, const ParamVector& global_t2) {
    return sub(global_t1, global_t2);
}

/// Swap the labels of two classes; features untouched. Involution.
inline Dataset label_flip(const Dataset& data, int class_a, int class_b) {
    if (class_a == class_b) throw std::invalid_argument("label_flip: classes must differ");
    if (class_a < 0 || class_b < 0) throw std::invalid_argument("label_flip: invalid class");
    Dataset out = data;
    for (auto& s : out) {
        if (s.label == class_a)
            s.label = class_b;
        else if (s.label == class_b)
            s.label = class_a;
    }
    return out;
}

struct BackdoorResult {
    Dataset data;            // clean + triggered samples
    std::vector<double> sample_weights;  // alpha on poisoned, 1-alpha on clean
    size_t poisoned_count = 0;
};

/// Overwrite the trigger coordinates of a seeded sample subset and relabel to
/// the target class. The returned weights feed train_local's loss hook so the
/// training objective blends main and backdoor loss with weight alpha.
inline BackdoorResult backdoor_poison(const Dataset& data, const BackdoorTrigger& trigger,
                                      double poison_fraction, double alpha, uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("backdoor_poison: empty dataset");
    if (poison_fraction <= 0.0 || poison_fraction > 1.0)
        throw std::invalid_argument("backdoor_poison: poison_fraction in (0,1]");
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("backdoor_poison: alpha in (0,1]");

    BackdoorResult out;
    out.data = data;
    out.sample_weights.assign(data.size(), 1.0 - alpha);
    size_t k = static_cast<size_t>(std::llround(poison_fraction * static_cast<double>(data.size())));
    k = std::max<size_t>(1, std::min(k, data.size()));
    Rng rng(seed);
    auto picks = rng.sample_without_replacement(data.size(), k);
    for (size_t idx : picks) {
        Sample& s = out.data[idx];
        int dims = std::min<int>(trigger.trigger_dims, static_cast<int>(s.x.size()));
        for (int d = 0; d < dims; ++d) s.x[d] = trigger.trigger_value;
        s.label = trigger.target_class;
        out.sample_weights[idx] = alpha;
    }
    out.poisoned_count = k;
    return out;
}

/// Apply the trigger to every sample (for measuring attack success rate).
inline Dataset apply_trigger(const Dataset& data, const BackdoorTrigger& trigger) {
    Dataset out = data;
    for (auto& s : out) {
        int dims = std::min<int>(trigger.trigger_dims, static_cast<int>(s.x.size()));
        for (int d = 0; d < dims; ++d) s.x[d] = trigger.trigger_value;
    }
    return out;
}

inline std::vector<ParamVector> sybil_clone(const ParamVector& base_update, int count) {
    if (count < 1) throw std::invalid_argument("sybil_clone: count >= 1");
    return std::vector<ParamVector>(static_cast<size_t>(count), base_update);
}

}  // namespace martfl
