#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "bimanual/keyframes.hpp"
#include "keyframe_oracle.hpp"
#include "test_util.hpp"

using namespace bimanual;
using bimanual::testing::brute_force_keyframes;
using bimanual::testing::random_keyframe_demo;

namespace {

BimanualAction action_at(const Vec3& right, const Vec3& left, bool right_open = true, bool left_open = true) {
    BimanualAction a;
    a.right.pose = Pose(right, Quat::Identity());
    a.left.pose = Pose(left, Quat::Identity());
    a.right.open = right_open;
    a.left.open = left_open;
    return a;
}

Demonstration demo_from(const std::vector<BimanualAction>& actions) {
    Demonstration d;
    for (std::size_t t = 0; t < actions.size(); ++t) {
        DemoStep s;
        s.time_s = 0.1 * static_cast<double>(t);
        s.action = actions[t];
        d.steps.push_back(s);
    }
    return d;
}

}  // namespace

TEST(Keyframes, GripperCloseAndTerminal) {
    std::vector<BimanualAction> acts;
    for (int t = 0; t < 10; ++t) acts.push_back(action_at(Vec3(0.1, 0.2, 0.9), Vec3(-0.1, 0.2, 0.9), t < 5));
    EXPECT_EQ(extract_keyframes(demo_from(acts)).indices, (std::vector<std::size_t>{5, 9}));
}

TEST(Keyframes, ContinuousMotionOnlyTerminal) {
    std::vector<BimanualAction> acts;
    for (int t = 0; t < 20; ++t) {
        acts.push_back(action_at(Vec3(0.01 * t, 0.0, 0.9), Vec3(0.0, -0.02 * t, 0.9)));
    }
    EXPECT_EQ(extract_keyframes(demo_from(acts)).indices, (std::vector<std::size_t>{19}));
}

TEST(Keyframes, HoldThenToggle) {
    // Right arm moves for steps 0-4 and holds 5-19; left gripper toggles at 7.
    KeyframeParams p;
    p.stationary_window = 3;
    std::vector<BimanualAction> acts;
    for (int t = 0; t < 20; ++t) {
        const double x = 0.02 * std::min(t, 4);
        acts.push_back(action_at(Vec3(x, 0.0, 0.9), Vec3(0.0, 0.3, 0.9), true, t < 7));
    }
    // Stationary over {4,5,6} first at 6; the toggle at 7 then absorbs it.
    EXPECT_EQ(extract_keyframes(acts, p).indices, (std::vector<std::size_t>{7, 19}));
    EXPECT_EQ(extract_keyframes(acts, p), brute_force_keyframes(acts, p));
}

TEST(Keyframes, MatchesBruteForceOnRandomDemos) {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 200; ++trial) {
        KeyframeParams p;
        p.stationary_window = std::uniform_int_distribution<int>(2, 6)(gen);
        p.merge_gap = std::uniform_int_distribution<int>(0, 4)(gen);
        const auto acts = random_keyframe_demo(gen);
        EXPECT_EQ(extract_keyframes(acts, p), brute_force_keyframes(acts, p)) << "trial " << trial;
    }
}

TEST(Keyframes, Invariants) {
    std::mt19937_64 gen(22);
    for (int trial = 0; trial < 100; ++trial) {
        const auto acts = random_keyframe_demo(gen);
        const KeyframeSet ks = extract_keyframes(acts);
        ASSERT_FALSE(ks.indices.empty());
        EXPECT_EQ(ks.indices.back(), acts.size() - 1);
        for (std::size_t i = 1; i < ks.indices.size(); ++i) EXPECT_LT(ks.indices[i - 1], ks.indices[i]);
        EXPECT_EQ(extract_keyframes(acts), ks);
    }
}

TEST(Keyframes, AppendingKeepsEarlierKeyframes) {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 50; ++trial) {
        auto acts = random_keyframe_demo(gen);
        const KeyframeSet before = extract_keyframes(acts);
        const auto extra = random_keyframe_demo(gen);
        acts.insert(acts.end(), extra.begin(), extra.end());
        const KeyframeSet after = extract_keyframes(acts);
        const std::set<std::size_t> kept(after.indices.begin(), after.indices.end());
        const std::size_t old_last = before.indices.back();
        for (std::size_t k : before.indices) {
            if (k == old_last) continue;  // terminal frame may relocate
            // Merging can move a keyframe forward by less than merge_gap.
            bool found = false;
            for (std::size_t d = 0; d < 2 && !found; ++d) found = kept.count(k + d) > 0;
            EXPECT_TRUE(found) << "trial " << trial << " lost keyframe " << k;
        }
    }
}

TEST(Keyframes, RejectsShortDemosAndBadParams) {
    EXPECT_THROW(extract_keyframes(std::vector<BimanualAction>(1)), InputError);
    KeyframeParams p;
    p.stationary_window = 1;
    EXPECT_THROW(extract_keyframes(std::vector<BimanualAction>(5), p), InputError);
    p = KeyframeParams{};
    p.trans_eps = 0.0;
    EXPECT_THROW(extract_keyframes(std::vector<BimanualAction>(5), p), InputError);
}

TEST(NextKeyframe, SingleTerminalKeyframe) {
    std::mt19937_64 gen(24);
    const std::vector<BimanualAction> acts = random_keyframe_demo(gen);
    const Demonstration demo = demo_from(acts);
    const KeyframeSet ks{{acts.size() - 1}};
    const auto slots = next_keyframe_slots(acts.size(), ks);
    const auto table = keyframe_actions(demo, ks);
    ASSERT_EQ(table.size(), 1u);
    for (std::size_t s : slots) EXPECT_EQ(table[s], acts.back());
}

TEST(NextKeyframe, DenseKeyframesTargetSuccessor) {
    const std::size_t n = 12;
    KeyframeSet ks;
    for (std::size_t t = 0; t < n; ++t) ks.indices.push_back(t);
    const auto slots = next_keyframe_slots(n, ks);
    for (std::size_t t = 0; t + 1 < n; ++t) EXPECT_EQ(ks.indices[slots[t]], t + 1);
}

TEST(NextKeyframe, MatchesScanForward) {
    std::mt19937_64 gen(25);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 60)(gen);
        KeyframeSet ks;
        for (std::size_t t = 0; t + 1 < n; ++t) {
            if (gen() % 4 == 0) ks.indices.push_back(t);
        }
        ks.indices.push_back(n - 1);
        const auto slots = next_keyframe_slots(n, ks);
        ASSERT_EQ(slots.size(), n - 1);
        for (std::size_t t = 0; t + 1 < n; ++t) {
            std::size_t expect = 0;
            while (ks.indices[expect] <= t) ++expect;
            EXPECT_EQ(slots[t], expect);
        }
    }
}
