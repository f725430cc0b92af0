#include "bimanual/simworld.hpp"

#include <algorithm>
#include <cmath>

#include "bimanual/codec.hpp"

namespace bimanual {

namespace {

// Executes scripted phases against the world and records one DemoStep per
// 10 Hz tick. Waypoints are snapped to the discrete action space so that the
// recorded keyframe actions replay exactly.
class ScriptRunner {
public:
    ScriptRunner(const TaskSpec& task, const WorldState& w, const ExpertOptions& options)
        : task_(task), options_(options), grid_(workspace_grid()), world_(w) {
        record(PerArm<bool>{false, false});
    }

    const WorldState& world() const { return world_; }
    const GridSpec& grid() const { return grid_; }
    Pose pose(Arm arm) const { return world_.grippers[arm].pose; }

    Pose waypoint(const Vec3& p) const { return snap_pose(Pose(p, top_down()), grid_); }
    Pose shifted(const Pose& from, int di, int dj, int dk) const {
        const Vec3 d(di * grid_.voxel_size, dj * grid_.voxel_size, dk * grid_.voxel_size);
        return snap_pose(Pose(from.position() + d, from.orientation()), grid_);
    }
    static Quat top_down() { return quat_from_axis_angle_deg(Vec3::UnitX(), 180.0); }

    // Synchronised straight-line motion of both arms, then `hold` ticks at the
    // targets. Arms reach their targets on the same tick.
    void move(const PerArm<Pose>& targets, double speed, int hold, PerArm<bool> collide = {false, false}) {
        const PerArm<Pose> start{pose(Arm::right), pose(Arm::left)};
        double seconds = 0.0;
        for (Arm arm : kArms) {
            const PoseDelta d = pose_delta(start[arm], targets[arm]);
            seconds = std::max({seconds, d.trans_dist / speed, d.geodesic_angle / kMaxAngularSpeed});
        }
        const int ticks = std::max(1, static_cast<int>(std::ceil(seconds / kStepDt - 1e-9)));
        for (int k = 1; k <= ticks; ++k) {
            BimanualAction cmd;
            const double f = static_cast<double>(k) / ticks;
            for (Arm arm : kArms) {
                cmd[arm].open = world_.grippers[arm].open;
                if (k == ticks || start[arm] == targets[arm]) {
                    cmd[arm].pose = targets[arm];
                } else {
                    const Vec3 p = start[arm].position() + f * (targets[arm].position() - start[arm].position());
                    cmd[arm].pose = Pose(p, start[arm].orientation().slerp(f, targets[arm].orientation()));
                }
            }
            tick(cmd, collide);
        }
        stay(hold, collide);
    }

    void move_arm(Arm arm, const Pose& target, double speed, int hold, bool collide = false) {
        PerArm<Pose> targets{pose(Arm::right), pose(Arm::left)};
        targets[arm] = target;
        PerArm<bool> flags{false, false};
        flags[arm] = collide;
        move(targets, speed, hold, flags);
    }

    // Changes gripper states in place on the first tick, then holds.
    void actuate(PerArm<bool> open, int hold) {
        BimanualAction cmd;
        for (Arm arm : kArms) cmd[arm] = {pose(arm), open[arm], false};
        tick(cmd, {false, false});
        stay(hold, {false, false});
    }
    void actuate_arm(Arm arm, bool open, int hold) {
        PerArm<bool> flags{world_.grippers.right.open, world_.grippers.left.open};
        flags[arm] = open;
        actuate(flags, hold);
    }

    ExpertResult finish(std::string goal) {
        ExpertResult r;
        r.demo.steps = std::move(steps_);
        r.demo.goal = std::move(goal);
        r.demo.task_id = task_.name;
        r.demo.variation_id = world_.variation;
        r.demo.seed = world_.seed;
        const std::size_t n = r.demo.steps.size();
        r.demo.duration_s = r.demo.steps.back().time_s;
        for (std::size_t i = 0; i < n; ++i) {
            r.demo.steps[i].observation.timestep_fraction = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
        }
        r.success = succeeded_ && !world_.collided && !(task_.prehensile && world_.grasp_missed);
        r.states = std::move(states_);
        return r;
    }

private:
    void stay(int hold, PerArm<bool> collide) {
        for (int k = 0; k < hold; ++k) {
            BimanualAction cmd;
            for (Arm arm : kArms) cmd[arm] = {pose(arm), world_.grippers[arm].open, false};
            tick(cmd, collide);
        }
    }

    void tick(const BimanualAction& cmd, PerArm<bool> collide) {
        world_ = step(world_, cmd, kStepDt);
        record(collide);
    }

    void record(PerArm<bool> collide) {
        DemoStep s;
        s.time_s = static_cast<double>(steps_.size()) * kStepDt;
        if (options_.render) {
            const auto cams = rig_cameras(options_.rig, world_);
            s.observation = render(world_, cams);
        } else {
            for (Arm arm : kArms) {
                s.observation.proprio[arm].gripper_open = world_.grippers[arm].open;
                s.observation.proprio[arm].ee_pose = world_.grippers[arm].pose;
            }
        }
        for (Arm arm : kArms) {
            s.action[arm] = {world_.grippers[arm].pose, world_.grippers[arm].open, collide[arm]};
        }
        steps_.push_back(std::move(s));
        states_.push_back(world_);
        if (success(world_, task_)) succeeded_ = true;
    }

    const TaskSpec& task_;
    const ExpertOptions& options_;
    GridSpec grid_;
    WorldState world_;
    std::vector<DemoStep> steps_;
    std::vector<WorldState> states_;
    bool succeeded_ = false;
};

int voxels(double meters) { return static_cast<int>(std::lround(meters / 0.01)); }

// Both grippers behind the box, then an integer-voxel push onto the target.
void script_push_box(ScriptRunner& s) {
    const WorldState& w = s.world();
    const Vec3 box = w.body("box").pose.position();
    const Vec3 target = w.body("target_area").pose.position();
    const double half = std::get<BoxShape>(w.body("box").shape).half_extents.x();
    const double behind = box.x() - half - 0.01;
    const PerArm<Pose> contact{s.waypoint(Vec3(behind, box.y() - 0.06, 0.80)),
                               s.waypoint(Vec3(behind, box.y() + 0.06, 0.80))};
    s.move(contact, 0.3, 3, {true, true});
    const int di = voxels(target.x() - box.x());
    const int dj = voxels(target.y() - box.y());
    s.move({s.shifted(contact.right, di, dj, 0), s.shifted(contact.left, di, dj, 0)}, 0.08, 3, {true, true});
}

// Antipodal squeeze across y, then a straight lift.
void script_lift_ball(ScriptRunner& s) {
    const WorldState& w = s.world();
    const Vec3 c = w.body("ball").pose.position();
    const double r = std::get<SphereShape>(w.body("ball").shape).radius;
    s.move({s.waypoint(c + Vec3(0.0, -(r + 0.07), 0.0)), s.waypoint(c + Vec3(0.0, r + 0.07, 0.0))}, 0.5, 3);
    const PerArm<Pose> contact{s.waypoint(c + Vec3(0.0, -(r + 0.008), 0.0)),
                               s.waypoint(c + Vec3(0.0, r + 0.008, 0.0))};
    s.move(contact, 0.1, 4, {true, true});
    s.actuate({false, false}, 3);
    s.move({s.shifted(contact.right, 0, 0, 20), s.shifted(contact.left, 0, 0, 20)}, 0.1, 3);
}

// Each arm presses one target button; the right arm takes the one at lower y.
void script_push_buttons(ScriptRunner& s) {
    const WorldState& w = s.world();
    std::array<const RigidBody*, 2> targets{&w.body(w.target_ids[0]), &w.body(w.target_ids[1])};
    if (targets[0]->pose.position().y() > targets[1]->pose.position().y()) std::swap(targets[0], targets[1]);
    PerArm<Pose> above, press;
    for (Arm arm : kArms) {
        const RigidBody& b = *targets[arm == Arm::right ? 0 : 1];
        const double top = b.pose.position().z() + std::get<CylinderShape>(b.shape).half_height;
        const Vec3 xy(b.pose.position().x(), b.pose.position().y(), 0.0);
        above[arm] = s.waypoint(xy + Vec3(0.0, 0.0, top + 0.10));
        press[arm] = s.waypoint(xy + Vec3(0.0, 0.0, top + 0.5 * kPressHeight));
    }
    s.move(above, 0.5, 3);
    s.move(press, 0.1, 3, {true, true});
    // Back up and settle; the settle adds a separate terminal keyframe.
    s.move(above, 0.2, 6);
}

// Hold the tray at its short ends and lift it with the item on top.
void script_lift_tray(ScriptRunner& s) {
    const WorldState& w = s.world();
    const Vec3 c = w.body("tray").pose.position();
    const double half_y = std::get<BoxShape>(w.body("tray").shape).half_extents.y();
    const double outside = half_y + 0.10;
    s.move({s.waypoint(c + Vec3(0.0, -outside, 0.12)), s.waypoint(c + Vec3(0.0, outside, 0.12))}, 0.5, 3);
    s.move({s.waypoint(c + Vec3(0.0, -outside, 0.0)), s.waypoint(c + Vec3(0.0, outside, 0.0))}, 0.3, 3);
    const PerArm<Pose> grip{s.waypoint(c + Vec3(0.0, -(half_y + 0.008), 0.0)),
                            s.waypoint(c + Vec3(0.0, half_y + 0.008, 0.0))};
    s.move(grip, 0.2, 4, {true, true});
    s.actuate({false, false}, 3);
    s.move({s.shifted(grip.right, 0, 0, 36), s.shifted(grip.left, 0, 0, 36)}, 0.3, 3);
}

// Right arm picks the item up near its -y end and passes it to the left arm
// above the table center line.
void script_handover(ScriptRunner& s) {
    const WorldState& w = s.world();
    const Vec3 item = w.body("item").pose.position();
    const Vec3 grasp = item + Vec3(0.0, -0.05, 0.0);
    const Vec3 handover(item.x(), 0.0, 0.98);
    s.move({s.waypoint(grasp + Vec3(0.0, 0.0, 0.12)), s.waypoint(handover + Vec3(0.0, 0.20, 0.0))}, 0.5, 3);
    s.move_arm(Arm::right, s.waypoint(grasp), 0.2, 4, true);
    s.actuate_arm(Arm::right, false, 3);
    s.move_arm(Arm::right, s.waypoint(handover + Vec3(0.0, -0.06, 0.0)), 0.2, 3);
    s.move_arm(Arm::left, s.waypoint(handover + Vec3(0.0, 0.06, 0.0)), 0.1, 4, true);
    s.actuate_arm(Arm::left, false, 4);
    s.actuate_arm(Arm::right, true, 3);
    s.move_arm(Arm::right, s.waypoint(Vec3(item.x(), -0.25, 1.10)), 0.3, 3);
}

}  // namespace

ExpertResult expert(const TaskSpec& task, const WorldState& w, const ExpertOptions& options) {
    if (w.task != task.id) throw ConfigError("world does not belong to task " + task.name);
    ScriptRunner runner(task, w, options);
    switch (task.id) {
        case TaskId::push_box: script_push_box(runner); break;
        case TaskId::lift_ball: script_lift_ball(runner); break;
        case TaskId::push_buttons: script_push_buttons(runner); break;
        case TaskId::lift_tray: script_lift_tray(runner); break;
        case TaskId::handover_easy: script_handover(runner); break;
    }
    return runner.finish(reset(task, w.variation, w.seed).goal);
}

}  // namespace bimanual
