#include "bimanual/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bimanual {

namespace {
// Re-normalising a unit quaternion can flip its last bits, so quaternions
// already unit to within rounding are kept as given. Stored poses then read
// back bit-identical.
Quat unit(const Quat& q) {
    const double n2 = q.squaredNorm();
    if (std::abs(n2 - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon()) return q;
    return q.normalized();
}
}  // namespace

Pose::Pose(const Vec3& position, const Quat& orientation) : position_(position), orientation_(unit(orientation)) {}

Pose Pose::inverse() const {
    const Quat inv = orientation_.conjugate();
    return Pose(-(inv * position_), inv);
}

Pose Pose::translated(const Vec3& d) const {
    Pose out = *this;
    out.position_ += d;
    return out;
}

bool Pose::operator==(const Pose& other) const {
    return position_ == other.position_ && orientation_.coeffs() == other.orientation_.coeffs();
}

Pose pose_compose(const Pose& a, const Pose& b) {
    return Pose(a.position() + a.orientation() * b.position(), a.orientation() * b.orientation());
}

PoseDelta pose_delta(const Pose& a, const Pose& b) {
    PoseDelta d;
    d.trans_dist = (a.position() - b.position()).norm();
    // 2*acos(|<qa,qb>|) evaluated as 2*atan2(|v|, |w|) of the relative
    // rotation, which stays accurate for tiny angles.
    const Quat rel = a.orientation().conjugate() * b.orientation();
    const double angle = 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
    d.geodesic_angle = std::clamp(rad2deg(angle), 0.0, 180.0);
    return d;
}

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

Quat quat_from_axis_angle_deg(const Vec3& axis, double deg) {
    return Quat(Eigen::AngleAxisd(deg2rad(deg), axis.normalized()));
}

const char* arm_name(Arm arm) { return arm == Arm::right ? "right" : "left"; }

void validate_demonstration(const Demonstration& demo) {
    if (demo.steps.size() < 2) {
        throw InputError("demonstration needs at least 2 steps, got " + std::to_string(demo.steps.size()));
    }
    for (std::size_t i = 1; i < demo.steps.size(); ++i) {
        if (!(demo.steps[i].time_s > demo.steps[i - 1].time_s)) {
            throw InputError("timestamps not strictly increasing at step " + std::to_string(i));
        }
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

}  // namespace bimanual
