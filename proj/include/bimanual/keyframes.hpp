#pragma once

#include <cstddef>
#include <vector>

#include "bimanual/core.hpp"

namespace bimanual {

struct KeyframeParams {
    int stationary_window = 4;  // steps
    double trans_eps = 0.001;   // meters
    double rot_eps = 0.5;       // degrees
    int merge_gap = 2;          // steps

    void validate() const;
};

struct KeyframeSet {
    std::vector<std::size_t> indices;  // strictly increasing, always ends at the last step
    bool operator==(const KeyframeSet&) const = default;
};

/// A step is a keyframe when either gripper's open flag changes there, or when
/// either arm becomes stationary (pose unchanged within eps over the trailing
/// window) at that step after not being stationary one step earlier. Keyframes
/// closer than merge_gap collapse onto the later one; the final step is always
/// a keyframe.
KeyframeSet extract_keyframes(const Demonstration& demo, const KeyframeParams& params = {});

/// Same rule on a bare action sequence (one entry per step).
KeyframeSet extract_keyframes(const std::vector<BimanualAction>& actions, const KeyframeParams& params = {});

/// The action recorded at each keyframe, in keyframe order.
std::vector<BimanualAction> keyframe_actions(const Demonstration& demo, const KeyframeSet& ks);

/// For every step t < last, the position in ks.indices of the first keyframe
/// strictly after t (the next-best-action target of step t).
std::vector<std::size_t> next_keyframe_slots(std::size_t step_count, const KeyframeSet& ks);

}  // namespace bimanual
