#pragma once

#include <cstdint>
#include <vector>

#include "bimanual/camvox.hpp"
#include "bimanual/core.hpp"

namespace bimanual {

struct PerturbSpec {
    double max_trans = 0.125;  // meters, per axis
    double max_rot_z = 45.0;   // degrees, yaw about the workspace center
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct PerturbResult {
    VoxelGrid grid;
    std::vector<BimanualAction> actions;
    Pose applied_transform;  // world-frame transform applied to scene and actions
};

/// The rigid transform drawn from spec: uniform translation in
/// [-max_trans, max_trans]^3 composed with a yaw in [-max_rot_z, max_rot_z]
/// about the vertical axis through the grid center.
Pose sample_perturbation(const PerturbSpec& spec, const GridSpec& grid);

/// Moves every occupied cell center by the transform and re-bins it into a
/// fresh grid (cells landing together merge counts and colour sums; cells
/// leaving the grid are dropped). Action poses are transformed the same way;
/// gripper flags are untouched. The exact identity transform returns the
/// inputs unchanged.
PerturbResult apply_perturbation(const VoxelGrid& grid, const std::vector<BimanualAction>& actions,
                                 const Pose& transform);

PerturbResult perturb(const VoxelGrid& grid, const std::vector<BimanualAction>& actions, const PerturbSpec& spec);

}  // namespace bimanual
