#include "bimanual/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bimanual {

namespace {

double wrap360(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a = 0.0;
    return a;
}

int angle_bin(double deg) {
    return std::min(static_cast<int>(std::floor(wrap360(deg) / kRotationBinDeg)), kRotationBins - 1);
}

}  // namespace

void validate_discrete(const DiscreteArmAction& d, const GridSpec& spec) {
    if (!spec.contains(d.trans)) throw CodecError("translation index outside the grid");
    for (int b : d.rot_bins) {
        if (b < 0 || b >= kRotationBins) throw CodecError("rotation bin " + std::to_string(b) + " outside [0, 72)");
    }
}

std::array<double, 3> euler_xyz_deg(const Quat& q) {
    const Mat3 r = q.normalized().toRotationMatrix();
    const double cos_theta = std::hypot(r(0, 0), r(1, 0));
    const double theta = std::atan2(-r(2, 0), cos_theta);
    double psi = 0.0;
    double phi = 0.0;
    if (cos_theta > 1e-12) {
        psi = std::atan2(r(2, 1), r(2, 2));
        phi = std::atan2(r(1, 0), r(0, 0));
    } else {
        // Gimbal lock: only psi -/+ phi is observable; put it all on phi.
        phi = std::atan2(-r(0, 1), r(1, 1));
    }
    return {wrap360(rad2deg(psi)), wrap360(rad2deg(theta)), wrap360(rad2deg(phi))};
}

Quat quat_from_euler_xyz_deg(const std::array<double, 3>& angles) {
    const Quat qx(Eigen::AngleAxisd(deg2rad(angles[0]), Vec3::UnitX()));
    const Quat qy(Eigen::AngleAxisd(deg2rad(angles[1]), Vec3::UnitY()));
    const Quat qz(Eigen::AngleAxisd(deg2rad(angles[2]), Vec3::UnitZ()));
    return (qz * qy * qx).normalized();
}

bool canonical_rotation_bins(const std::array<int, 3>& bins) {
    const int theta = bins[1];
    return theta < 18 || theta >= 54;
}

DiscreteArmAction encode_arm(const ArmAction& a, const GridSpec& spec, Arm arm) {
    const auto idx = world_to_voxel(a.pose.position(), spec);
    if (!idx) {
        const Vec3& p = a.pose.position();
        throw EncodeError(std::string(arm_name(arm)) + " arm position (" + std::to_string(p.x()) + ", " +
                          std::to_string(p.y()) + ", " + std::to_string(p.z()) + ") outside the workspace");
    }
    const auto angles = euler_xyz_deg(a.pose.orientation());
    return {*idx, {angle_bin(angles[0]), angle_bin(angles[1]), angle_bin(angles[2])}, a.open, a.collide};
}

DiscreteBimanualAction encode(const BimanualAction& a, const GridSpec& spec) {
    return {encode_arm(a.right, spec, Arm::right), encode_arm(a.left, spec, Arm::left)};
}

ArmAction decode_arm(const DiscreteArmAction& d, const GridSpec& spec) {
    validate_discrete(d, spec);
    std::array<double, 3> angles{};
    for (int a = 0; a < 3; ++a) angles[a] = (d.rot_bins[a] + 0.5) * kRotationBinDeg;
    return {Pose(voxel_to_world(d.trans, spec), quat_from_euler_xyz_deg(angles)), d.open, d.collide};
}

BimanualAction decode(const DiscreteBimanualAction& d, const GridSpec& spec) {
    return {decode_arm(d.right, spec), decode_arm(d.left, spec)};
}

Pose snap_pose(const Pose& pose, const GridSpec& spec) {
    return decode_arm(encode_arm({pose, true, false}, spec), spec).pose;
}

ArmLogits ArmLogits::zeros(const GridSpec& spec) {
    ArmLogits l;
    l.trans.assign(spec.cell_count(), 0.0);
    for (auto& r : l.rot) r.assign(kRotationBins, 0.0);
    return l;
}

std::vector<double> ArmTarget::dense(Head head) const {
    std::size_t n = 2;
    if (head == Head::trans) n = trans_classes;
    if (head == Head::rot_x || head == Head::rot_y || head == Head::rot_z) n = kRotationBins;
    std::vector<double> v(n, 0.0);
    v.at(hot_index(head)) = 1.0;
    return v;
}

std::size_t ArmTarget::hot_index(Head head) const {
    switch (head) {
        case Head::trans: return trans;
        case Head::rot_x: return static_cast<std::size_t>(rot[0]);
        case Head::rot_y: return static_cast<std::size_t>(rot[1]);
        case Head::rot_z: return static_cast<std::size_t>(rot[2]);
        case Head::open: return static_cast<std::size_t>(open);
        case Head::collide: return static_cast<std::size_t>(collide);
    }
    return 0;
}

ArmTarget make_arm_target(const DiscreteArmAction& d, const GridSpec& spec) {
    validate_discrete(d, spec);
    ArmTarget t;
    t.trans_classes = spec.cell_count();
    t.trans = spec.flat(d.trans);
    t.rot = d.rot_bins;
    t.open = d.open ? 1 : 0;
    t.collide = d.collide ? 1 : 0;
    return t;
}

TrainingTarget make_target(const BimanualAction& a, const GridSpec& spec) {
    const auto d = encode(a, spec);
    return {make_arm_target(d.right, spec), make_arm_target(d.left, spec)};
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t hot) {
    if (logits.empty() || hot >= logits.size()) throw LossError("target index outside the head");
    std::size_t arg = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) throw LossError("non-finite logit");
        if (logits[i] > logits[arg]) arg = i;
    }
    const double m = logits[arg];
    // log-sum-exp with the max term pulled out: m + log1p(sum over others).
    double rest = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (i != arg) rest += std::exp(logits[i] - m);
    }
    return (m - logits[hot]) + std::log1p(rest);
}

namespace {

double arm_loss(const ArmLogits& l, const ArmTarget& t) {
    if (l.trans.size() != t.trans_classes) {
        throw LossError("trans head has " + std::to_string(l.trans.size()) + " logits, target expects " +
                        std::to_string(t.trans_classes));
    }
    double loss = softmax_cross_entropy(l.trans, t.trans);
    for (int a = 0; a < 3; ++a) {
        if (l.rot[a].size() != static_cast<std::size_t>(kRotationBins)) throw LossError("rotation head must have 72 logits");
        loss += softmax_cross_entropy(l.rot[a], static_cast<std::size_t>(t.rot[a]));
    }
    loss += softmax_cross_entropy(l.open, static_cast<std::size_t>(t.open));
    loss += softmax_cross_entropy(l.collide, static_cast<std::size_t>(t.collide));
    return loss;
}

}  // namespace

double bimanual_loss(const HeadLogits& logits, const TrainingTarget& target) {
    return arm_loss(logits.right, target.right) + arm_loss(logits.left, target.left);
}

}  // namespace bimanual
