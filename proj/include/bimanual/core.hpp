#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "bimanual/errors.hpp"

namespace bimanual {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

// Rigid transform. Quaternions are (w,x,y,z) and always unit length.
// Composition is local post-multiplication: compose(a, b) expresses b in the
// frame of a, i.e. world_T_b' = world_T_a * a_T_b.
class Pose {
public:
    Pose() : position_(Vec3::Zero()), orientation_(Quat::Identity()) {}
    Pose(const Vec3& position, const Quat& orientation);
    explicit Pose(const Vec3& position) : position_(position), orientation_(Quat::Identity()) {}

    static Pose identity() { return {}; }

    const Vec3& position() const { return position_; }
    const Quat& orientation() const { return orientation_; }
    Mat3 rotation() const { return orientation_.toRotationMatrix(); }

    Vec3 transform_point(const Vec3& p) const { return position_ + orientation_ * p; }
    Pose inverse() const;
    /// Same orientation, position shifted by d; a zero shift returns *this.
    Pose translated(const Vec3& d) const;

    bool operator==(const Pose& other) const;
    bool operator!=(const Pose& other) const { return !(*this == other); }

private:
    Vec3 position_;
    Quat orientation_;
};

Pose pose_compose(const Pose& a, const Pose& b);

struct PoseDelta {
    double trans_dist = 0.0;       // meters
    double geodesic_angle = 0.0;   // degrees, [0, 180]
};

/// Translation distance and rotation geodesic between two poses. Handles the
/// quaternion double cover, so q and -q are at angle 0.
PoseDelta pose_delta(const Pose& a, const Pose& b);

double deg2rad(double deg);
double rad2deg(double rad);
Quat quat_from_axis_angle_deg(const Vec3& axis, double deg);

enum class Arm : std::uint8_t { right = 0, left = 1 };
inline constexpr std::array<Arm, 2> kArms{Arm::right, Arm::left};
const char* arm_name(Arm arm);

/// Two values addressed by arm role, never by list position.
template <typename T>
struct PerArm {
    T right{};
    T left{};

    T& operator[](Arm arm) { return arm == Arm::right ? right : left; }
    const T& operator[](Arm arm) const { return arm == Arm::right ? right : left; }
    bool operator==(const PerArm&) const = default;
};

struct ArmAction {
    Pose pose;
    bool open = true;
    bool collide = false;

    bool operator==(const ArmAction&) const = default;
};

using BimanualAction = PerArm<ArmAction>;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// One camera frame. rgb is H*W*3 row-major; depth is H*W meters, 0 = invalid.
struct CameraImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;
    std::vector<float> depth;

    bool operator==(const CameraImage&) const = default;
};

inline constexpr float kInvalidDepth = 0.0f;

struct ArmProprio {
    bool gripper_open = true;
    Pose ee_pose;
    bool operator==(const ArmProprio&) const = default;
};

struct Observation {
    std::map<std::string, CameraImage> images;
    PerArm<ArmProprio> proprio;
    double timestep_fraction = 0.0;

    bool operator==(const Observation&) const = default;
};

struct DemoStep {
    double time_s = 0.0;
    Observation observation;
    BimanualAction action;

    bool operator==(const DemoStep&) const = default;
};

struct Demonstration {
    std::vector<DemoStep> steps;
    std::string goal;
    std::string task_id;
    int variation_id = 0;
    std::uint64_t seed = 0;
    double duration_s = 0.0;

    bool operator==(const Demonstration&) const = default;
};

/// Throws InputError unless the demonstration has >= 2 steps with strictly
/// increasing timestamps.
void validate_demonstration(const Demonstration& demo);

// Seed splitting: split_seed(base, i) = splitmix64(base + (i + 1) * golden).
// Independent of thread count and evaluation order.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t split_seed(std::uint64_t base, std::uint64_t index);

/// mt19937_64 with a portable double conversion (53 high bits), so sampled
/// values do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

private:
    std::mt19937_64 engine_;
};

}  // namespace bimanual
