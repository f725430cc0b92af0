#include <gtest/gtest.h>

#include <set>

#include "bimanual/core.hpp"
#include "test_util.hpp"

using namespace bimanual;
using bimanual::testing::random_pose;
using bimanual::testing::to_matrix;

TEST(Pose, IdentityIsNeutral) {
    std::mt19937_64 gen(1);
    const Pose p = random_pose(gen);
    const Pose left = pose_compose(Pose::identity(), p);
    const Pose right = pose_compose(p, Pose::identity());
    EXPECT_LT(pose_delta(left, p).trans_dist, 1e-12);
    EXPECT_LT(pose_delta(right, p).geodesic_angle, 1e-9);
}

TEST(Pose, InverseCancels) {
    std::mt19937_64 gen(2);
    for (int i = 0; i < 200; ++i) {
        const Pose p = random_pose(gen, 2.0);
        const Pose e = pose_compose(p, p.inverse());
        EXPECT_LT(e.position().norm(), 1e-9);
        EXPECT_NEAR(std::abs(e.orientation().w()), 1.0, 1e-9);
    }
}

TEST(Pose, ComposeMatchesHomogeneousMatrices) {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 1000; ++i) {
        const Pose a = random_pose(gen, 3.0);
        const Pose b = random_pose(gen, 3.0);
        const Eigen::Matrix4d expect = to_matrix(a) * to_matrix(b);
        const Eigen::Matrix4d got = to_matrix(pose_compose(a, b));
        EXPECT_LT((expect - got).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Pose, ComposeIsAssociativeAndNormalised) {
    std::mt19937_64 gen(4);
    for (int i = 0; i < 200; ++i) {
        const Pose a = random_pose(gen), b = random_pose(gen), c = random_pose(gen);
        const Pose l = pose_compose(pose_compose(a, b), c);
        const Pose r = pose_compose(a, pose_compose(b, c));
        EXPECT_LT(pose_delta(l, r).trans_dist, 1e-9);
        EXPECT_LT(pose_delta(l, r).geodesic_angle, 1e-6);
        EXPECT_NEAR(l.orientation().norm(), 1.0, 1e-9);
    }
}

TEST(Pose, ConstructorNormalises) {
    const Pose p(Vec3::Zero(), Quat(2.0, 0.0, 0.0, 0.0));
    EXPECT_NEAR(p.orientation().norm(), 1.0, 1e-15);
}

TEST(PoseDelta, SelfIsZero) {
    std::mt19937_64 gen(5);
    const Pose p = random_pose(gen);
    const PoseDelta d = pose_delta(p, p);
    EXPECT_EQ(d.trans_dist, 0.0);
    EXPECT_EQ(d.geodesic_angle, 0.0);
}

TEST(PoseDelta, PureTranslation) {
    const Pose a(Vec3(0.1, 0.2, 0.3));
    const Pose b(Vec3(1.1, 0.2, 0.3));
    const PoseDelta d = pose_delta(a, b);
    EXPECT_NEAR(d.trans_dist, 1.0, 1e-15);
    EXPECT_EQ(d.geodesic_angle, 0.0);
}

TEST(PoseDelta, NinetyDegreesAboutZ) {
    std::mt19937_64 gen(6);
    const Quat qa = bimanual::testing::random_quat(gen);
    const Quat qb = quat_from_axis_angle_deg(Vec3::UnitZ(), 90.0) * qa;
    const PoseDelta d = pose_delta(Pose(Vec3::Zero(), qa), Pose(Vec3::Zero(), qb));
    EXPECT_NEAR(d.trans_dist, 0.0, 1e-15);
    EXPECT_NEAR(d.geodesic_angle, 90.0, 1e-9);
}

TEST(PoseDelta, DoubleCover) {
    std::mt19937_64 gen(7);
    for (int i = 0; i < 100; ++i) {
        const Quat q = bimanual::testing::random_quat(gen);
        const Quat neg(-q.w(), -q.x(), -q.y(), -q.z());
        const PoseDelta d = pose_delta(Pose(Vec3::Zero(), q), Pose(Vec3::Zero(), neg));
        EXPECT_EQ(d.trans_dist, 0.0);
        EXPECT_NEAR(d.geodesic_angle, 0.0, 1e-6);
    }
}

TEST(PoseDelta, MatchesAcosOfDot) {
    std::mt19937_64 gen(8);
    for (int i = 0; i < 500; ++i) {
        const Quat a = bimanual::testing::random_quat(gen);
        const Quat b = bimanual::testing::random_quat(gen);
        const double dot = std::min(1.0, std::abs(a.dot(b)));
        const double expect = rad2deg(2.0 * std::acos(dot));
        EXPECT_NEAR(pose_delta(Pose(Vec3::Zero(), a), Pose(Vec3::Zero(), b)).geodesic_angle, expect, 1e-6);
    }
}

TEST(PerArm, AddressesByRole) {
    PerArm<int> v{1, 2};
    EXPECT_EQ(v[Arm::right], 1);
    EXPECT_EQ(v[Arm::left], 2);
    v[Arm::left] = 5;
    EXPECT_EQ(v.left, 5);
    EXPECT_STREQ(arm_name(Arm::right), "right");
    EXPECT_STREQ(arm_name(Arm::left), "left");
}

TEST(Demonstration, ValidationRejectsShortAndUnordered) {
    Demonstration d;
    d.steps.resize(1);
    EXPECT_THROW(validate_demonstration(d), InputError);
    d.steps.resize(3);
    d.steps[0].time_s = 0.0;
    d.steps[1].time_s = 0.1;
    d.steps[2].time_s = 0.1;
    EXPECT_THROW(validate_demonstration(d), InputError);
    d.steps[2].time_s = 0.2;
    EXPECT_NO_THROW(validate_demonstration(d));
}

TEST(Seeds, SplitMixReferenceValue) {
    // First output of the reference SplitMix64 generator seeded with 0.
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Seeds, SplitIsDeterministicAndDistinct) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        EXPECT_EQ(split_seed(42, i), split_seed(42, i));
        seen.insert(split_seed(42, i));
    }
    EXPECT_EQ(seen.size(), 10000u);
    EXPECT_NE(split_seed(1, 0), split_seed(2, 0));
}

TEST(Seeds, RngIsReproducibleAndInRange) {
    Rng a(9), b(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform(-2.0, 3.0);
        EXPECT_EQ(x, b.uniform(-2.0, 3.0));
        EXPECT_GE(x, -2.0);
        EXPECT_LT(x, 3.0);
    }
    for (int i = 0; i < 1000; ++i) EXPECT_LT(a.index(7), 7u);
}

TEST(Errors, MessagesCarryTheKind) {
    try {
        throw ValidationError("bad manifest");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("bad manifest"), std::string::npos);
    }
}
