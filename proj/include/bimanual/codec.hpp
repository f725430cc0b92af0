#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bimanual/camvox.hpp"
#include "bimanual/core.hpp"

namespace bimanual {

inline constexpr double kRotationBinDeg = 5.0;
inline constexpr int kRotationBins = 72;  // 360 / 5

struct DiscreteArmAction {
    VoxelIndex trans;
    std::array<int, 3> rot_bins{0, 0, 0};  // about x, y, z
    bool open = true;
    bool collide = false;

    bool operator==(const DiscreteArmAction&) const = default;
};

using DiscreteBimanualAction = PerArm<DiscreteArmAction>;

/// Throws CodecError if the translation leaves the grid or a rotation bin is
/// outside [0, 72).
void validate_discrete(const DiscreteArmAction& d, const GridSpec& spec);

// Rotations use fixed-axis X-Y-Z Euler angles, R = Rz(phi) * Ry(theta) * Rx(psi).
// Extraction returns theta in [-90, 90] degrees; all angles are then wrapped
// into [0, 360).
std::array<double, 3> euler_xyz_deg(const Quat& q);
Quat quat_from_euler_xyz_deg(const std::array<double, 3>& angles);

/// The discrete actions whose theta bin lies in the canonical extraction
/// range; decode followed by encode is the identity exactly on this set.
bool canonical_rotation_bins(const std::array<int, 3>& bins);

DiscreteArmAction encode_arm(const ArmAction& a, const GridSpec& spec, Arm arm = Arm::right);
DiscreteBimanualAction encode(const BimanualAction& a, const GridSpec& spec);

ArmAction decode_arm(const DiscreteArmAction& d, const GridSpec& spec);
BimanualAction decode(const DiscreteBimanualAction& d, const GridSpec& spec);

/// decode(encode(pose)): the nearest pose the discrete action space can express.
Pose snap_pose(const Pose& pose, const GridSpec& spec);

/// Per-arm class logits. Binary heads use class order (false, true).
struct ArmLogits {
    std::vector<double> trans;
    std::array<std::vector<double>, 3> rot;
    std::array<double, 2> open{0.0, 0.0};
    std::array<double, 2> collide{0.0, 0.0};

    static ArmLogits zeros(const GridSpec& spec);
};

using HeadLogits = PerArm<ArmLogits>;

/// One-hot targets stored as the hot class index per head. dense() expands a
/// head to the full one-hot vector.
struct ArmTarget {
    std::size_t trans_classes = 0;
    std::uint32_t trans = 0;  // flat voxel index, x-fastest
    std::array<int, 3> rot{0, 0, 0};
    int open = 0;
    int collide = 0;

    enum class Head { trans, rot_x, rot_y, rot_z, open, collide };
    static constexpr std::array<Head, 6> kHeads{Head::trans, Head::rot_x, Head::rot_y,
                                                Head::rot_z, Head::open, Head::collide};
    std::vector<double> dense(Head head) const;
    std::size_t hot_index(Head head) const;
    bool operator==(const ArmTarget&) const = default;
};

using TrainingTarget = PerArm<ArmTarget>;

ArmTarget make_arm_target(const DiscreteArmAction& d, const GridSpec& spec);
TrainingTarget make_target(const BimanualAction& a, const GridSpec& spec);

/// Softmax cross-entropy summed over the four head families of both arms
/// (the rotation family contributes one term per axis).
double bimanual_loss(const HeadLogits& logits, const TrainingTarget& target);

/// log(sum(exp(x))) - x[hot].
double softmax_cross_entropy(std::span<const double> logits, std::size_t hot);

}  // namespace bimanual
