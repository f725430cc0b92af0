#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bimanual/camvox.hpp"
#include "bimanual/core.hpp"

namespace bimanual {

// ---------------------------------------------------------------------------
// World constants
// ---------------------------------------------------------------------------

inline constexpr double kTableHeight = 0.75;       // m
inline constexpr double kStepDt = 0.1;             // s, 10 Hz recording
inline constexpr double kMaxLinearSpeed = 0.5;     // m/s
inline constexpr double kMaxAngularSpeed = 90.0;   // deg/s
inline constexpr double kGraspRadius = 0.02;       // m, from the body surface
inline constexpr double kGripperRadius = 0.05;     // m, collision sphere
inline constexpr double kPressHeight = 0.015;      // m, button press window

/// The 1 m^3 workspace the voxel grid and the action space cover.
GridSpec workspace_grid();

// ---------------------------------------------------------------------------
// Bodies and grippers
// ---------------------------------------------------------------------------

struct BoxShape {
    Vec3 half_extents;
    bool operator==(const BoxShape&) const = default;
};
struct SphereShape {
    double radius = 0.0;
    bool operator==(const SphereShape&) const = default;
};
/// Axis along the body's local z.
struct CylinderShape {
    double radius = 0.0;
    double half_height = 0.0;
    bool operator==(const CylinderShape&) const = default;
};
using Shape = std::variant<BoxShape, SphereShape, CylinderShape>;

/// Signed distance from a world point to the shape placed at pose.
double signed_distance(const Shape& shape, const Pose& pose, const Vec3& p);
/// Half of the shape's world-aligned height (for table clearance).
double half_height_world(const Shape& shape, const Pose& pose);

/// How a body reacts to the grippers.
enum class Handling {
    fixed,          // never moves
    grasp,          // attaches to a gripper that closes within kGraspRadius
    bimanual_push,  // slides on the table only while both grippers push it
    bimanual_lift,  // follows the grippers only while both squeeze it from opposite sides
};

struct RigidBody {
    std::string id;
    Shape shape;
    Pose pose;
    double mass_kg = 1.0;
    Rgb color;
    Handling handling = Handling::fixed;
    std::optional<std::string> supported_by;  // rides along when the supporter moves

    bool graspable() const { return handling == Handling::grasp; }
    bool operator==(const RigidBody&) const = default;
};

struct GripperState {
    Arm arm = Arm::right;
    Pose pose;
    bool open = true;
    std::optional<std::string> attached;
    Pose attach_offset;  // gripper-frame pose of the attached body

    bool operator==(const GripperState&) const = default;
};

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

enum class TaskId { push_box, lift_ball, push_buttons, lift_tray, handover_easy };

struct Taxonomy {
    bool temporal = false;
    bool spatial = false;
    bool physical = false;
    bool symmetric = false;
    bool synchronous = false;
    bool operator==(const Taxonomy&) const = default;
};

/// Published per-task demonstration statistics.
struct TaskReference {
    double duration_s = 0.0;
    double keyframes = 0.0;
    int items = 0;
    int variations = 0;
};

struct Variation {
    std::string name;
    std::vector<std::string> colors;  // target colours, when the task has any
};

struct TaskSpec {
    TaskId id;
    std::string name;       // registry id, e.g. "push_box"
    char letter = '?';      // row letter in the task catalogue
    std::string title;
    std::string language_template;
    std::vector<Variation> variations;
    Taxonomy taxonomy;
    TaskReference reference;
    int item_count = 0;
    bool prehensile = false;
};

/// One row of the full task catalogue, including tasks that are documented but
/// not simulated (articulated or deformable objects).
struct CatalogEntry {
    char letter = '?';
    std::string name;
    std::string title;
    Taxonomy taxonomy;
    TaskReference reference;
    std::string success_metric;
    bool implemented = false;
};

const std::vector<TaskSpec>& implemented_tasks();
const std::vector<CatalogEntry>& task_catalog();
/// Throws ConfigError for unknown ids.
const TaskSpec& task_spec(std::string_view name);
const TaskSpec& task_spec(TaskId id);

// ---------------------------------------------------------------------------
// World state and operations
// ---------------------------------------------------------------------------

struct WorldState {
    TaskId task = TaskId::push_box;
    int variation = 0;
    std::uint64_t seed = 0;
    std::vector<RigidBody> bodies;
    PerArm<GripperState> grippers;
    double time_s = 0.0;
    double table_height = kTableHeight;
    bool collided = false;
    bool grasp_missed = false;
    std::vector<std::string> target_ids;  // task-specific success targets

    const RigidBody& body(std::string_view id) const;
    RigidBody& body(std::string_view id);
    bool has_body(std::string_view id) const;

    bool operator==(const WorldState&) const = default;
};

struct ResetResult {
    WorldState world;
    std::string goal;
};

/// Deterministic task setup: object poses drawn uniformly from task-specific
/// spawn regions using seed. Throws ConfigError for invalid variations.
ResetResult reset(const TaskSpec& task, int variation, std::uint64_t seed);

/// Variation used for an episode seed.
int variation_for_seed(const TaskSpec& task, std::uint64_t seed);

/// Quasi-static kinematic update. Grippers move toward the commanded poses at
/// capped speed; a gripper changes its open state only once it sits exactly at
/// its commanded pose. The two grippers colliding freezes the world.
WorldState step(const WorldState& w, const BimanualAction& cmd, double dt_s = kStepDt);

bool success(const WorldState& w, const TaskSpec& task);

/// Geometric press test for one button body.
bool button_pressed(const WorldState& w, std::string_view button_id);

// ---------------------------------------------------------------------------
// Cameras and rendering
// ---------------------------------------------------------------------------

struct CameraRig {
    std::vector<CameraModel> static_cameras;
    int width = 256;
    int height = 256;
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;  // shared wrist intrinsics
    Pose wrist_mount;                               // gripper-frame camera pose
};

/// front, left_shoulder and right_shoulder plus two wrist cameras.
CameraRig default_rig(int resolution = 256);

/// Camera pose looking from eye toward target with world z up.
Pose look_at(const Vec3& eye, const Vec3& target);

/// Static cameras plus wrist cameras placed at the given gripper poses.
std::vector<CameraModel> rig_cameras(const CameraRig& rig, const PerArm<Pose>& ee_poses);
std::vector<CameraModel> rig_cameras(const CameraRig& rig, const WorldState& w);

/// Ray-cast depth (0 where nothing is hit) and flat-shaded colour of the
/// table, bodies and gripper fingers. Proprioception is copied from w.
Observation render(const WorldState& w, std::span<const CameraModel> cams);

// ---------------------------------------------------------------------------
// Scripted experts
// ---------------------------------------------------------------------------

struct ExpertOptions {
    bool render = false;
    CameraRig rig = default_rig();
};

struct ExpertResult {
    Demonstration demo;
    bool success = false;               // predicate held at some recorded step
    std::vector<WorldState> states;     // world at every recorded step
};

ExpertResult expert(const TaskSpec& task, const WorldState& w, const ExpertOptions& options = {});

}  // namespace bimanual
