#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "bimanual/simworld.hpp"
#include "test_util.hpp"

using namespace bimanual;

namespace {

BimanualAction hold(const WorldState& w) {
    BimanualAction a;
    for (Arm arm : kArms) {
        a[arm].pose = w.grippers[arm].pose;
        a[arm].open = w.grippers[arm].open;
    }
    return a;
}

WorldState without_bodies(WorldState w) {
    w.bodies.clear();
    // Park both grippers far behind every camera used below.
    w.grippers.right.pose = Pose(Vec3(-20.0, -1.0, -20.0));
    w.grippers.left.pose = Pose(Vec3(-20.0, 1.0, -20.0));
    return w;
}

double body_bottom(const RigidBody& b) { return b.pose.position().z() - half_height_world(b.shape, b.pose); }

}  // namespace

TEST(Registry, FiveImplementedTasksAndThirteenRows) {
    EXPECT_EQ(implemented_tasks().size(), 5u);
    EXPECT_EQ(task_catalog().size(), 13u);
    std::size_t implemented = 0;
    for (const auto& row : task_catalog()) implemented += row.implemented ? 1 : 0;
    EXPECT_EQ(implemented, 5u);
    EXPECT_THROW(task_spec("make_coffee"), ConfigError);
    for (const auto& t : implemented_tasks()) EXPECT_EQ(&task_spec(t.name), &task_spec(t.id));
}

TEST(Registry, TaxonomyMatchesPublishedTable) {
    // temporal, spatial, physical, symmetric, synchronous
    const std::vector<std::pair<std::string, Taxonomy>> expected{
        {"push_box", {true, true, false, true, true}},
        {"lift_ball", {true, true, true, true, true}},
        {"push_buttons", {true, false, false, true, false}},
        {"lift_tray", {true, true, true, true, true}},
        {"handover_easy", {true, true, true, false, false}},
    };
    for (const auto& [name, tax] : expected) EXPECT_EQ(task_spec(name).taxonomy, tax) << name;
    EXPECT_EQ(task_spec("push_box").letter, 'a');
    EXPECT_EQ(task_spec("lift_ball").letter, 'b');
    EXPECT_EQ(task_spec("push_buttons").letter, 'c');
    EXPECT_EQ(task_spec("lift_tray").letter, 'k');
    EXPECT_EQ(task_spec("handover_easy").letter, 'l');
}

TEST(Registry, VariationCounts) {
    EXPECT_EQ(task_spec("push_box").variations.size(), 1u);
    EXPECT_EQ(task_spec("lift_ball").variations.size(), 1u);
    EXPECT_EQ(task_spec("push_buttons").variations.size(), 5u);
    EXPECT_EQ(task_spec("lift_tray").variations.size(), 1u);
    EXPECT_EQ(task_spec("handover_easy").variations.size(), 1u);
}

TEST(Reset, Deterministic) {
    for (const auto& t : implemented_tasks()) {
        for (int v = 0; v < static_cast<int>(t.variations.size()); ++v) {
            const ResetResult a = reset(t, v, 1234);
            const ResetResult b = reset(t, v, 1234);
            EXPECT_EQ(a.world, b.world);
            EXPECT_EQ(a.goal, b.goal);
            EXPECT_NE(reset(t, v, 1235).world, a.world) << t.name;
        }
    }
}

TEST(Reset, UnknownVariationIsConfigError) {
    EXPECT_THROW(reset(task_spec("push_box"), 1, 0), ConfigError);
    EXPECT_THROW(reset(task_spec("push_buttons"), -1, 0), ConfigError);
}

TEST(Reset, ButtonGoalsNameTheTargetColours) {
    const TaskSpec& t = task_spec("push_buttons");
    std::set<std::string> goals;
    for (int v = 0; v < 5; ++v) {
        const ResetResult r = reset(t, v, 7);
        goals.insert(r.goal);
        for (const auto& c : t.variations[v].colors) {
            EXPECT_NE(r.goal.find(c), std::string::npos);
            EXPECT_TRUE(r.world.has_body("button_" + c));
        }
    }
    EXPECT_EQ(goals.size(), 5u);
}

TEST(Reset, SpawnsInsideWorkspace) {
    const GridSpec g = workspace_grid();
    for (const auto& t : implemented_tasks()) {
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const WorldState w = reset(t, variation_for_seed(t, seed), seed).world;
            for (const auto& b : w.bodies) {
                ASSERT_TRUE(world_to_voxel(b.pose.position(), g).has_value()) << t.name << " " << b.id;
                EXPECT_GE(body_bottom(b), kTableHeight - 1e-9 - (b.id == "table" ? 0.05 : 0.0));
            }
            for (Arm arm : kArms) ASSERT_TRUE(world_to_voxel(w.grippers[arm].pose.position(), g).has_value());
        }
    }
}

TEST(Step, HoldingIsAFixedPoint) {
    for (const auto& t : implemented_tasks()) {
        const WorldState w = reset(t, 0, 3).world;
        WorldState next = step(w, hold(w));
        EXPECT_DOUBLE_EQ(next.time_s, w.time_s + kStepDt);
        next.time_s = w.time_s;
        EXPECT_EQ(next, w) << t.name;
    }
}

TEST(Step, SpeedCaps) {
    const WorldState w = reset(task_spec("lift_ball"), 0, 4).world;
    BimanualAction cmd = hold(w);
    cmd.right.pose = w.grippers.right.pose.translated(Vec3(0.0, -0.3, 0.0));
    cmd.left.pose = Pose(w.grippers.left.pose.position(),
                         w.grippers.left.pose.orientation() * quat_from_axis_angle_deg(Vec3::UnitZ(), 90.0));
    const WorldState n = step(w, cmd);
    const auto dr = pose_delta(w.grippers.right.pose, n.grippers.right.pose);
    const auto dl = pose_delta(w.grippers.left.pose, n.grippers.left.pose);
    EXPECT_NEAR(dr.trans_dist, kMaxLinearSpeed * kStepDt, 1e-12);
    EXPECT_NEAR(dl.geodesic_angle, kMaxAngularSpeed * kStepDt, 1e-6);
    EXPECT_NEAR(dl.trans_dist, 0.0, 1e-12);
}

TEST(Step, SingleArmCannotPushTheBox) {
    WorldState w = reset(task_spec("push_box"), 0, 5).world;
    const RigidBody box = w.body("box");
    const double half = std::get<BoxShape>(box.shape).half_extents.x();
    // Right gripper against the near face, left parked far away.
    w.grippers.right.pose = Pose(box.pose.position() - Vec3(half + 0.01, 0.0, 0.0), w.grippers.right.pose.orientation());
    BimanualAction cmd = hold(w);
    cmd.right.pose = w.grippers.right.pose.translated(Vec3(0.3, 0.0, 0.0));
    for (int s = 0; s < 20; ++s) w = step(w, cmd);
    EXPECT_FALSE(w.collided);
    EXPECT_EQ(w.body("box").pose, box.pose);
}

TEST(Step, TwoArmPushMovesTheBox) {
    WorldState w = reset(task_spec("push_box"), 0, 5).world;
    const RigidBody box = w.body("box");
    const double half = std::get<BoxShape>(box.shape).half_extents.x();
    const Vec3 c = box.pose.position();
    w.grippers.right.pose = Pose(c + Vec3(-half - 0.01, -0.06, 0.0), w.grippers.right.pose.orientation());
    w.grippers.left.pose = Pose(c + Vec3(-half - 0.01, 0.06, 0.0), w.grippers.left.pose.orientation());
    BimanualAction cmd = hold(w);
    cmd.right.pose = w.grippers.right.pose.translated(Vec3(0.1, 0.0, 0.0));
    cmd.left.pose = w.grippers.left.pose.translated(Vec3(0.1, 0.0, 0.0));
    for (int s = 0; s < 5; ++s) w = step(w, cmd);
    EXPECT_NEAR((w.body("box").pose.position() - c).x(), 0.1, 1e-9);
}

TEST(Step, AntipodalLiftTracksGrippers) {
    WorldState w = reset(task_spec("lift_ball"), 0, 6).world;
    const RigidBody ball = w.body("ball");
    const double r = std::get<SphereShape>(ball.shape).radius;
    const Vec3 c = ball.pose.position();
    w.grippers.right.pose = Pose(c - Vec3(0.0, r + 0.01, 0.0), w.grippers.right.pose.orientation());
    w.grippers.left.pose = Pose(c + Vec3(0.0, r + 0.01, 0.0), w.grippers.left.pose.orientation());
    for (Arm arm : kArms) w.grippers[arm].open = false;
    BimanualAction cmd = hold(w);
    for (Arm arm : kArms) cmd[arm].pose = w.grippers[arm].pose.translated(Vec3(0.0, 0.0, 1.0));
    for (int s = 0; s < 25; ++s) w = step(w, cmd);
    EXPECT_FALSE(w.collided);
    EXPECT_NEAR(w.body("ball").pose.position().z() - c.z(), 1.0, 1e-9);
    EXPECT_NEAR((w.body("ball").pose.position() - c).head<2>().norm(), 0.0, 1e-12);
}

TEST(Step, OpenGrippersDoNotLift) {
    WorldState w = reset(task_spec("lift_ball"), 0, 6).world;
    const RigidBody ball = w.body("ball");
    const double r = std::get<SphereShape>(ball.shape).radius;
    const Vec3 c = ball.pose.position();
    w.grippers.right.pose = Pose(c - Vec3(0.0, r + 0.01, 0.0), w.grippers.right.pose.orientation());
    w.grippers.left.pose = Pose(c + Vec3(0.0, r + 0.01, 0.0), w.grippers.left.pose.orientation());
    BimanualAction cmd = hold(w);
    for (Arm arm : kArms) cmd[arm].pose = w.grippers[arm].pose.translated(Vec3(0.0, 0.0, 0.3));
    for (int s = 0; s < 10; ++s) w = step(w, cmd);
    EXPECT_EQ(w.body("ball").pose, ball.pose);
}

TEST(Step, GripperCollisionFreezesTheWorld) {
    WorldState w = reset(task_spec("lift_ball"), 0, 8).world;
    BimanualAction cmd = hold(w);
    const Vec3 mid = 0.5 * (w.grippers.right.pose.position() + w.grippers.left.pose.position());
    for (Arm arm : kArms) cmd[arm].pose = Pose(mid, w.grippers[arm].pose.orientation());
    int guard = 0;
    while (!w.collided && guard++ < 50) w = step(w, cmd);
    ASSERT_TRUE(w.collided);
    const WorldState frozen = w;
    for (int s = 0; s < 5; ++s) w = step(w, cmd);
    EXPECT_EQ(w.grippers, frozen.grippers);
    EXPECT_EQ(w.bodies, frozen.bodies);
    EXPECT_TRUE(w.collided);
    EXPECT_GT((w.grippers.right.pose.position() - w.grippers.left.pose.position()).norm(), 0.0);
}

TEST(Step, BodiesNeverSinkBelowTheTable) {
    std::mt19937_64 gen(51);
    const GridSpec g = workspace_grid();
    std::uniform_real_distribution<double> x(-0.1, 0.5), y(-0.4, 0.4), z(0.70, 1.3);
    for (const auto& t : implemented_tasks()) {
        for (int ep = 0; ep < 10; ++ep) {
            WorldState w = reset(t, 0, gen()).world;
            for (int k = 0; k < 30 && !w.collided; ++k) {
                BimanualAction cmd;
                for (Arm arm : kArms) {
                    cmd[arm].pose = Pose(Vec3(x(gen), y(gen), z(gen)), bimanual::testing::random_quat(gen));
                    cmd[arm].open = gen() % 2 == 0;
                }
                for (int s = 0; s < 10; ++s) {
                    w = step(w, cmd);
                    for (const auto& b : w.bodies) {
                        if (b.id == "table") continue;
                        ASSERT_GE(body_bottom(b), kTableHeight - 1e-9) << t.name << " " << b.id;
                    }
                }
            }
            (void)g;
        }
    }
}

TEST(Success, BallHeightThreshold) {
    const TaskSpec& t = task_spec("lift_ball");
    WorldState w = reset(t, 0, 9).world;
    auto at = [&](double z) {
        RigidBody& b = w.body("ball");
        b.pose = Pose(Vec3(b.pose.position().x(), b.pose.position().y(), z), b.pose.orientation());
        return success(w, t);
    };
    EXPECT_TRUE(at(0.951));
    EXPECT_FALSE(at(0.949));
    EXPECT_FALSE(at(0.95));
}

TEST(Success, TrayHeightAndItemOnTop) {
    const TaskSpec& t = task_spec("lift_tray");
    WorldState w = reset(t, 0, 10).world;
    const Vec3 rel = w.body("tray_item").pose.position() - w.body("tray").pose.position();
    auto place = [&](double tray_z, const Vec3& item_offset) {
        RigidBody& tray = w.body("tray");
        tray.pose = Pose(Vec3(tray.pose.position().x(), tray.pose.position().y(), tray_z), tray.pose.orientation());
        w.body("tray_item").pose = Pose(tray.pose.position() + item_offset, w.body("tray_item").pose.orientation());
        return success(w, t);
    };
    EXPECT_TRUE(place(1.201, rel));
    EXPECT_FALSE(place(1.199, rel));
    EXPECT_TRUE(place(1.21, rel));
    const double half_x = std::get<BoxShape>(w.body("tray").shape).half_extents.x();
    EXPECT_FALSE(place(1.21, rel + Vec3(half_x + 0.05, 0.0, 0.0)));
}

TEST(Success, HandoverHeldByLeftWithRightIdle) {
    const TaskSpec& t = task_spec("handover_easy");
    WorldState w = reset(t, 0, 11).world;
    w.grippers.left.open = false;
    w.grippers.left.attached = "item";
    auto at = [&](double z) {
        RigidBody& b = w.body("item");
        b.pose = Pose(Vec3(b.pose.position().x(), b.pose.position().y(), z), b.pose.orientation());
        return success(w, t);
    };
    EXPECT_TRUE(at(0.81));
    EXPECT_TRUE(at(0.801));
    EXPECT_FALSE(at(0.799));
    at(0.81);
    w.grippers.right.open = false;
    EXPECT_FALSE(success(w, t));
    w.grippers.right.open = true;
    w.grippers.left.attached.reset();
    EXPECT_FALSE(success(w, t));
}

TEST(Success, ButtonsNeedBothTargetsAtOnce) {
    const TaskSpec& t = task_spec("push_buttons");
    WorldState w = reset(t, 0, 12).world;
    auto above = [&](const std::string& id, double h) {
        const RigidBody& b = w.body(id);
        const double top = b.pose.position().z() + std::get<CylinderShape>(b.shape).half_height;
        return Pose(Vec3(b.pose.position().x(), b.pose.position().y(), top + h), w.grippers.right.pose.orientation());
    };
    const std::string a = w.target_ids[0], b = w.target_ids[1];
    w.grippers.right.pose = above(a, 0.01);
    EXPECT_TRUE(button_pressed(w, a));
    EXPECT_FALSE(success(w, t));
    w.grippers.left.pose = above(b, 0.01);
    EXPECT_TRUE(success(w, t));
    w.grippers.left.pose = above(b, kPressHeight + 0.001);
    EXPECT_FALSE(success(w, t));
}

TEST(Render, EmptyWorldHasNoDepth) {
    const WorldState w = without_bodies(reset(task_spec("push_box"), 0, 0).world);
    const CameraRig rig = default_rig(64);
    const auto cams = rig.static_cameras;
    const Observation obs = render(w, cams);
    ASSERT_EQ(obs.images.size(), cams.size());
    for (const auto& [name, img] : obs.images) {
        for (float d : img.depth) ASSERT_EQ(d, kInvalidDepth) << name;
        for (auto c : img.rgb) ASSERT_EQ(c, 0) << name;
    }
}

TEST(Render, SphereOnAxisDepth) {
    WorldState w = without_bodies(reset(task_spec("lift_ball"), 0, 0).world);
    const CameraRig rig = default_rig(256);
    const CameraModel front = rig.static_cameras.front();
    const Vec3 axis = front.extrinsic.orientation() * Vec3::UnitZ();
    for (double r : {0.05, 0.25, 0.5}) {
        RigidBody s;
        s.id = "sphere";
        s.shape = SphereShape{r};
        s.pose = Pose(front.extrinsic.position() + axis * 1.0);
        s.color = Rgb{200, 10, 10};
        w.bodies = {s};
        const std::vector<CameraModel> cams{front};
        const Observation obs = render(w, cams);
        const CameraImage& img = obs.images.at("front");
        const auto px = static_cast<std::size_t>(front.cy) * img.width + static_cast<std::size_t>(front.cx);
        EXPECT_NEAR(img.depth[px], 1.0 - r, 1e-6);
        EXPECT_EQ(img.rgb[3 * px], 200);
    }
}

TEST(Render, WristCamerasFollowTheGrippers) {
    const WorldState w = reset(task_spec("lift_ball"), 0, 13).world;
    const CameraRig rig = default_rig(32);
    const auto cams = rig_cameras(rig, w);
    ASSERT_EQ(cams.size(), 5u);
    for (Arm arm : kArms) {
        const auto it = std::find_if(cams.begin(), cams.end(), [&](const CameraModel& c) {
            return c.name == std::string(arm_name(arm)) + "_wrist";
        });
        ASSERT_NE(it, cams.end());
        EXPECT_EQ(it->extrinsic, pose_compose(w.grippers[arm].pose, rig.wrist_mount));
    }
    EXPECT_EQ(render(w, cams), render(w, cams));
}

// Rendering each body alone and fusing the five views must reproduce its
// surface: the occupied cells hug the body and their bounding box contains
// the cell of the body center.
TEST(Render, FusionIsPoseConsistent) {
    const GridSpec g = workspace_grid();
    const CameraRig rig = default_rig(128);
    for (const auto& t : implemented_tasks()) {
        const WorldState full = reset(t, 0, 14).world;
        for (const auto& b : full.bodies) {
            if (b.id == "table" || half_height_world(b.shape, b.pose) < 0.01 - 1e-12) continue;
            WorldState w = without_bodies(full);
            w.bodies = {b};
            const auto cams = rig.static_cameras;
            const VoxelGrid grid = fuse(render(w, cams), cams, g);
            ASSERT_GT(grid.occupied_count(), 0u) << b.id;
            VoxelIndex lo{1000, 1000, 1000}, hi{-1, -1, -1};
            for (const auto& cell : grid.cells()) {
                const VoxelIndex idx = g.unflat(cell.flat);
                EXPECT_LE(std::abs(signed_distance(b.shape, b.pose, voxel_to_world(idx, g))),
                          g.voxel_size * std::sqrt(3.0))
                    << t.name << " " << b.id;
                lo = {std::min(lo.i, idx.i), std::min(lo.j, idx.j), std::min(lo.k, idx.k)};
                hi = {std::max(hi.i, idx.i), std::max(hi.j, idx.j), std::max(hi.k, idx.k)};
            }
            const VoxelIndex c = *world_to_voxel(b.pose.position(), g);
            EXPECT_TRUE(c.i >= lo.i && c.i <= hi.i && c.j >= lo.j && c.j <= hi.j && c.k >= lo.k && c.k <= hi.k)
                << t.name << " " << b.id;
        }
    }
}

TEST(Expert, LiftBallSucceedsWithGripperChanges) {
    const TaskSpec& t = task_spec("lift_ball");
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const WorldState w = reset(t, 0, seed).world;
        const ExpertResult r = expert(t, w);
        ASSERT_TRUE(r.success);
        EXPECT_TRUE(success(r.states.back(), t));
        int changes = 0;
        for (std::size_t s = 1; s < r.demo.steps.size(); ++s) {
            for (Arm arm : kArms) changes += r.demo.steps[s].action[arm].open != r.demo.steps[s - 1].action[arm].open;
        }
        EXPECT_GE(changes, 2);
    }
}

TEST(Expert, ButtonPressesOverlap) {
    const TaskSpec& t = task_spec("push_buttons");
    for (int v = 0; v < 5; ++v) {
        const std::uint64_t seed = 100 + static_cast<std::uint64_t>(v);
        const WorldState w = reset(t, v, seed).world;
        const ExpertResult r = expert(t, w);
        ASSERT_TRUE(r.success);
        std::vector<std::size_t> a, b;
        for (std::size_t s = 0; s < r.states.size(); ++s) {
            if (button_pressed(r.states[s], w.target_ids[0])) a.push_back(s);
            if (button_pressed(r.states[s], w.target_ids[1])) b.push_back(s);
        }
        ASSERT_FALSE(a.empty());
        ASSERT_FALSE(b.empty());
        EXPECT_LE(std::max(a.front(), b.front()), std::min(a.back(), b.back()));
    }
}

TEST(Expert, DemonstrationsAreWellFormed) {
    for (const auto& t : implemented_tasks()) {
        const WorldState w = reset(t, 0, 21).world;
        ExpertOptions opt;
        opt.render = true;
        opt.rig = default_rig(16);
        const ExpertResult r = expert(t, w, opt);
        ASSERT_TRUE(r.success) << t.name;
        EXPECT_NO_THROW(validate_demonstration(r.demo));
        EXPECT_EQ(r.states.size(), r.demo.steps.size());
        const std::size_t n = r.demo.steps.size();
        for (std::size_t s = 0; s < n; ++s) {
            const auto& st = r.demo.steps[s];
            EXPECT_NEAR(st.time_s, 0.1 * static_cast<double>(s), 1e-9);
            EXPECT_EQ(st.observation.images.size(), 5u);
            for (Arm arm : kArms) {
                EXPECT_EQ(st.observation.proprio[arm].ee_pose, r.states[s].grippers[arm].pose);
                EXPECT_EQ(st.observation.proprio[arm].gripper_open, r.states[s].grippers[arm].open);
            }
        }
        EXPECT_EQ(expert(t, w, opt).demo, r.demo);
    }
}
