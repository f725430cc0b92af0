#include "bimanual/keyframes.hpp"

#include <algorithm>

namespace bimanual {

void KeyframeParams::validate() const {
    if (stationary_window < 2) throw InputError("stationary_window must be >= 2");
    if (!(trans_eps > 0.0) || !(rot_eps > 0.0)) throw InputError("keyframe eps values must be positive");
    if (merge_gap < 0) throw InputError("merge_gap must be >= 0");
}

namespace {

// Stationary at t: the pose at every step of the trailing window lies within
// eps of the pose at t. The window is truncated at step 0, so an arm resting
// from the start counts as stationary and produces no edge until it moves.
std::vector<bool> stationary_flags(const std::vector<BimanualAction>& actions, Arm arm, const KeyframeParams& p) {
    const std::size_t n = actions.size();
    const auto w = static_cast<std::size_t>(p.stationary_window);
    std::vector<bool> flags(n, false);
    for (std::size_t t = 0; t < n; ++t) {
        bool still = true;
        for (std::size_t s = t + 1 >= w ? t + 1 - w : 0; s < t && still; ++s) {
            const PoseDelta d = pose_delta(actions[s][arm].pose, actions[t][arm].pose);
            still = d.trans_dist < p.trans_eps && d.geodesic_angle < p.rot_eps;
        }
        flags[t] = still;
    }
    return flags;
}

}  // namespace

KeyframeSet extract_keyframes(const std::vector<BimanualAction>& actions, const KeyframeParams& params) {
    params.validate();
    const std::size_t n = actions.size();
    if (n < 2) throw InputError("demonstration too short for keyframe extraction");

    const PerArm<std::vector<bool>> still{stationary_flags(actions, Arm::right, params),
                                          stationary_flags(actions, Arm::left, params)};
    std::vector<std::size_t> candidates;
    for (std::size_t t = 1; t < n; ++t) {
        bool fire = false;
        for (Arm arm : kArms) {
            fire |= actions[t][arm].open != actions[t - 1][arm].open;
            fire |= still[arm][t] && !still[arm][t - 1];
        }
        if (fire) candidates.push_back(t);
    }
    if (candidates.empty() || candidates.back() != n - 1) candidates.push_back(n - 1);

    KeyframeSet ks;
    for (std::size_t t : candidates) {
        if (!ks.indices.empty() && t - ks.indices.back() < static_cast<std::size_t>(params.merge_gap)) {
            ks.indices.back() = t;
        } else {
            ks.indices.push_back(t);
        }
    }
    return ks;
}

KeyframeSet extract_keyframes(const Demonstration& demo, const KeyframeParams& params) {
    validate_demonstration(demo);
    std::vector<BimanualAction> actions;
    actions.reserve(demo.steps.size());
    for (const auto& s : demo.steps) actions.push_back(s.action);
    return extract_keyframes(actions, params);
}

std::vector<BimanualAction> keyframe_actions(const Demonstration& demo, const KeyframeSet& ks) {
    std::vector<BimanualAction> out;
    out.reserve(ks.indices.size());
    for (std::size_t k : ks.indices) {
        if (k >= demo.steps.size()) throw InputError("keyframe index beyond demonstration length");
        out.push_back(demo.steps[k].action);
    }
    return out;
}

std::vector<std::size_t> next_keyframe_slots(std::size_t step_count, const KeyframeSet& ks) {
    if (step_count == 0) return {};
    std::vector<std::size_t> slots(step_count - 1);
    std::size_t slot = 0;
    for (std::size_t t = 0; t + 1 < step_count; ++t) {
        while (slot < ks.indices.size() && ks.indices[slot] <= t) ++slot;
        if (slot == ks.indices.size()) throw InputError("keyframe set does not end at the final step");
        slots[t] = slot;
    }
    return slots;
}

}  // namespace bimanual
