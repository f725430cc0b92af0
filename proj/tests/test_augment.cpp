#include <gtest/gtest.h>

#include <random>

#include "bimanual/augment.hpp"
#include "bimanual/codec.hpp"
#include "bimanual/simworld.hpp"
#include "test_util.hpp"

using namespace bimanual;
using bimanual::testing::random_quat;

namespace {

VoxelGrid random_grid(std::mt19937_64& gen, std::size_t points) {
    const GridSpec g = workspace_grid();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> c(0, 255);
    std::vector<ColoredPoint> pts;
    for (std::size_t n = 0; n < points; ++n) {
        pts.push_back({g.origin + Vec3(u(gen), u(gen), u(gen)) * 0.999,
                       Rgb{static_cast<std::uint8_t>(c(gen)), static_cast<std::uint8_t>(c(gen)),
                           static_cast<std::uint8_t>(c(gen))}});
    }
    return VoxelGrid::from_points(g, pts);
}

// Positions within 4 mm of a cell center, so whole-voxel shifts never straddle an edge.
std::vector<BimanualAction> random_actions(std::mt19937_64& gen, std::size_t n) {
    const GridSpec g = workspace_grid();
    std::uniform_int_distribution<int> cell(10, 89);
    std::uniform_real_distribution<double> off(-0.004, 0.004);
    std::vector<BimanualAction> out(n);
    for (auto& a : out) {
        for (Arm arm : kArms) {
            const Vec3 c = voxel_to_world({cell(gen), cell(gen), cell(gen)}, g);
            a[arm].pose = Pose(c + Vec3(off(gen), off(gen), off(gen)), random_quat(gen));
            a[arm].open = gen() % 2 == 0;
            a[arm].collide = gen() % 2 == 0;
        }
    }
    return out;
}

}  // namespace

TEST(Augment, ZeroSpecIsBitExactIdentity) {
    std::mt19937_64 gen(41);
    const VoxelGrid grid = random_grid(gen, 3000);
    const auto acts = random_actions(gen, 5);
    PerturbSpec spec;
    spec.max_trans = 0.0;
    spec.max_rot_z = 0.0;
    spec.rng_seed = 99;
    const PerturbResult r = perturb(grid, acts, spec);
    EXPECT_EQ(r.applied_transform, Pose::identity());
    EXPECT_EQ(r.grid, grid);
    EXPECT_EQ(r.actions, acts);
}

TEST(Augment, WholeVoxelShiftIsEquivariant) {
    std::mt19937_64 gen(42);
    const GridSpec g = workspace_grid();
    const VoxelGrid grid = random_grid(gen, 3000);
    const auto acts = random_actions(gen, 4);
    std::uniform_int_distribution<int> shift(-5, 5);
    for (int trial = 0; trial < 50; ++trial) {
        const VoxelIndex m = trial == 0 ? VoxelIndex{3, 0, 0} : VoxelIndex{shift(gen), shift(gen), shift(gen)};
        const Pose t(Vec3(m.i, m.j, m.k) * g.voxel_size);
        const PerturbResult r = apply_perturbation(grid, acts, t);

        std::size_t kept = 0;
        for (const auto& cell : grid.cells()) {
            const VoxelIndex src = g.unflat(cell.flat);
            const VoxelIndex dst{src.i + m.i, src.j + m.j, src.k + m.k};
            if (!g.contains(dst)) continue;
            ++kept;
            ASSERT_TRUE(r.grid.occupied(dst));
            EXPECT_EQ(r.grid.count(dst), cell.count);
            EXPECT_EQ(r.grid.color(dst), grid.color(src));
        }
        EXPECT_EQ(r.grid.occupied_count(), kept);

        for (std::size_t s = 0; s < acts.size(); ++s) {
            for (Arm arm : kArms) {
                const auto before = encode_arm(acts[s][arm], g);
                const auto after = encode_arm(r.actions[s][arm], g);
                EXPECT_EQ(after.trans, (VoxelIndex{before.trans.i + m.i, before.trans.j + m.j, before.trans.k + m.k}));
                EXPECT_EQ(after.rot_bins, before.rot_bins);
                EXPECT_EQ(after.open, before.open);
                EXPECT_EQ(after.collide, before.collide);
            }
        }
    }
}

TEST(Augment, DeterministicPerSeed) {
    std::mt19937_64 gen(43);
    const VoxelGrid grid = random_grid(gen, 2000);
    const auto acts = random_actions(gen, 3);
    PerturbSpec a;
    a.rng_seed = 7;
    PerturbSpec b = a;
    b.rng_seed = 8;
    const PerturbResult r1 = perturb(grid, acts, a);
    const PerturbResult r2 = perturb(grid, acts, a);
    EXPECT_EQ(r1.grid, r2.grid);
    EXPECT_EQ(r1.actions, r2.actions);
    EXPECT_EQ(r1.applied_transform, r2.applied_transform);
    EXPECT_NE(perturb(grid, acts, b).applied_transform, r1.applied_transform);
}

TEST(Augment, TransformWithinLimits) {
    const GridSpec g = workspace_grid();
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        PerturbSpec s;
        s.rng_seed = seed;
        const Pose t = sample_perturbation(s, g);
        // Yaw only: the z axis stays fixed.
        EXPECT_LT((t.orientation() * Vec3::UnitZ() - Vec3::UnitZ()).norm(), 1e-12);
        const double yaw = std::abs(pose_delta(Pose::identity(), Pose(Vec3::Zero(), t.orientation())).geodesic_angle);
        EXPECT_LE(yaw, 45.0 + 1e-9);
        // The grid center moves by the translation part only.
        const Vec3 moved = t.transform_point(g.center()) - g.center();
        EXPECT_LE(moved.cwiseAbs().maxCoeff(), 0.125 + 1e-12);
    }
}

TEST(Augment, SceneGripperDistancePreserved) {
    std::mt19937_64 gen(44);
    const GridSpec g = workspace_grid();
    const VoxelGrid grid = random_grid(gen, 500);
    const auto acts = random_actions(gen, 2);
    PerturbSpec s;
    s.rng_seed = 5;
    const PerturbResult r = perturb(grid, acts, s);
    const double diag = g.voxel_size * std::sqrt(3.0);
    // Every surviving cell lies within one diagonal of where its source cell
    // center was sent, so distances to the moved grippers are preserved.
    std::size_t checked = 0;
    for (const auto& cell : grid.cells()) {
        const Vec3 src = voxel_to_world(g.unflat(cell.flat), g);
        const Vec3 dst = r.applied_transform.transform_point(src);
        const auto idx = world_to_voxel(dst, g);
        if (!idx) continue;
        ASSERT_TRUE(r.grid.occupied(*idx));
        const Vec3 binned = voxel_to_world(*idx, g);
        for (std::size_t k = 0; k < acts.size(); ++k) {
            for (Arm arm : kArms) {
                const double d0 = (src - acts[k][arm].pose.position()).norm();
                const double d1 = (binned - r.actions[k][arm].pose.position()).norm();
                EXPECT_LE(std::abs(d0 - d1), diag);
            }
        }
        ++checked;
    }
    EXPECT_GT(checked, 0u);
}

TEST(Augment, RejectsBadSpec) {
    PerturbSpec s;
    s.max_trans = -0.1;
    EXPECT_THROW(s.validate(), InputError);
    s = PerturbSpec{};
    s.max_rot_z = 181.0;
    EXPECT_THROW(s.validate(), InputError);
}
