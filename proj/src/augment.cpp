#include "bimanual/augment.hpp"

namespace bimanual {

void PerturbSpec::validate() const {
    if (!(max_trans >= 0.0)) throw InputError("max_trans must be >= 0");
    if (!(max_rot_z >= 0.0 && max_rot_z <= 180.0)) throw InputError("max_rot_z must lie in [0, 180]");
}

Pose sample_perturbation(const PerturbSpec& spec, const GridSpec& grid) {
    spec.validate();
    Rng rng(spec.rng_seed);
    Vec3 t;
    for (int a = 0; a < 3; ++a) t[a] = rng.uniform(-spec.max_trans, spec.max_trans);
    const double yaw = rng.uniform(-spec.max_rot_z, spec.max_rot_z);
    if (yaw == 0.0) return Pose(t);
    // p' = R (p - c) + c + t
    const Quat q = quat_from_axis_angle_deg(Vec3::UnitZ(), yaw);
    const Vec3 c = grid.center();
    return Pose(c + t - q * c, q);
}

PerturbResult apply_perturbation(const VoxelGrid& grid, const std::vector<BimanualAction>& actions,
                                 const Pose& transform) {
    if (transform == Pose::identity()) return {grid, actions, transform};

    const GridSpec& spec = grid.spec();
    std::vector<VoxelGrid::Cell> moved;
    moved.reserve(grid.cells().size());
    for (const auto& cell : grid.cells()) {
        const Vec3 p = transform.transform_point(voxel_to_world(spec.unflat(cell.flat), spec));
        const auto idx = world_to_voxel(p, spec);
        if (!idx) continue;
        VoxelGrid::Cell c = cell;
        c.flat = spec.flat(*idx);
        moved.push_back(c);
    }

    PerturbResult out{VoxelGrid(spec, std::move(moved)), {}, transform};
    out.actions.reserve(actions.size());
    for (const auto& a : actions) {
        BimanualAction b = a;
        for (Arm arm : kArms) b[arm].pose = pose_compose(transform, a[arm].pose);
        out.actions.push_back(b);
    }
    return out;
}

PerturbResult perturb(const VoxelGrid& grid, const std::vector<BimanualAction>& actions, const PerturbSpec& spec) {
    return apply_perturbation(grid, actions, sample_perturbation(spec, grid.spec()));
}

}  // namespace bimanual
