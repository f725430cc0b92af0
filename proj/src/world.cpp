#include "bimanual/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace bimanual {

double signed_distance(const Shape& shape, const Pose& pose, const Vec3& p) {
    const Vec3 local = pose.orientation().conjugate() * (p - pose.position());
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SphereShape>) {
                return local.norm() - s.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                const Vec3 q = local.cwiseAbs() - s.half_extents;
                return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
            } else {
                const Eigen::Vector2d q(local.head<2>().norm() - s.radius, std::abs(local.z()) - s.half_height);
                return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
            }
        },
        shape);
}

double half_height_world(const Shape& shape, const Pose& pose) {
    const Mat3 r = pose.rotation();
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SphereShape>) {
                return s.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                return std::abs(r(2, 0)) * s.half_extents.x() + std::abs(r(2, 1)) * s.half_extents.y() +
                       std::abs(r(2, 2)) * s.half_extents.z();
            } else {
                const double c = std::abs(r(2, 2));
                return c * s.half_height + s.radius * std::sqrt(std::max(0.0, 1.0 - c * c));
            }
        },
        shape);
}

const RigidBody& WorldState::body(std::string_view id) const {
    for (const auto& b : bodies) {
        if (b.id == id) return b;
    }
    throw ConfigError("no body '" + std::string(id) + "'");
}

RigidBody& WorldState::body(std::string_view id) {
    return const_cast<RigidBody&>(std::as_const(*this).body(id));
}

bool WorldState::has_body(std::string_view id) const {
    return std::any_of(bodies.begin(), bodies.end(), [&](const RigidBody& b) { return b.id == id; });
}

namespace {

// Moves at most max_lin / max_ang toward target; returns target itself on
// arrival so that arrival can be tested with exact equality.
Pose move_toward(const Pose& from, const Pose& target, double max_lin, double max_ang_deg) {
    const Vec3 d = target.position() - from.position();
    const double dist = d.norm();
    const double angle = pose_delta(from, target).geodesic_angle;
    const bool pos_done = dist <= max_lin * (1.0 + 1e-9);
    const bool rot_done = angle <= max_ang_deg * (1.0 + 1e-9);
    if (pos_done && rot_done) return target;
    const Vec3 p = pos_done ? target.position() : Vec3(from.position() + d * (max_lin / dist));
    const Quat q = rot_done ? target.orientation() : from.orientation().slerp(max_ang_deg / angle, target.orientation());
    return Pose(p, q);
}

bool in_contact(const RigidBody& b, const Vec3& p) { return signed_distance(b.shape, b.pose, p) <= kGraspRadius; }

bool antipodal(const RigidBody& b, const Vec3& pr, const Vec3& pl) {
    const Eigen::Vector2d a = (pr - b.pose.position()).head<2>();
    const Eigen::Vector2d c = (pl - b.pose.position()).head<2>();
    if (a.norm() < 1e-9 || c.norm() < 1e-9) return false;
    return a.normalized().dot(c.normalized()) <= -0.8;
}

// Displacement pushes toward the body center (horizontal component).
bool pushes_into(const RigidBody& b, const Vec3& gripper, const Vec3& disp) {
    const Eigen::Vector2d to_center = (b.pose.position() - gripper).head<2>();
    return disp.head<2>().dot(to_center) > 0.0;
}

void reanchor(WorldState& w, const std::string& id) {
    const RigidBody& b = w.body(id);
    for (Arm arm : kArms) {
        GripperState& g = w.grippers[arm];
        if (g.attached == id) g.attach_offset = pose_compose(g.pose.inverse(), b.pose);
    }
}

}  // namespace

WorldState step(const WorldState& w, const BimanualAction& cmd, double dt_s) {
    if (!(dt_s > 0.0)) throw InputError("dt must be positive");
    WorldState out = w;
    out.time_s = w.time_s + dt_s;
    if (w.collided) return out;

    PerArm<Pose> moved;
    PerArm<Vec3> disp;
    for (Arm arm : kArms) {
        moved[arm] = move_toward(w.grippers[arm].pose, cmd[arm].pose, kMaxLinearSpeed * dt_s, kMaxAngularSpeed * dt_s);
        disp[arm] = moved[arm].position() - w.grippers[arm].pose.position();
    }
    if ((moved.right.position() - moved.left.position()).norm() < 2.0 * kGripperRadius) {
        out.collided = true;
        return out;
    }
    for (Arm arm : kArms) out.grippers[arm].pose = moved[arm];

    const auto& gr = w.grippers.right;
    const auto& gl = w.grippers.left;
    std::map<std::string, Vec3> body_disp;
    for (RigidBody& b : out.bodies) {
        const bool held_r = gr.attached == b.id;
        const bool held_l = gl.attached == b.id;
        const Vec3 before = b.pose.position();
        if (held_r && held_l) {
            b.pose = b.pose.translated(0.5 * (disp.right + disp.left));
        } else if (held_r || held_l) {
            const GripperState& g = held_r ? out.grippers.right : out.grippers.left;
            if (g.pose != (held_r ? gr : gl).pose) b.pose = pose_compose(g.pose, g.attach_offset);
        } else if (b.handling == Handling::bimanual_push) {
            const RigidBody& old = w.body(b.id);
            const Vec3& pr = gr.pose.position();
            const Vec3& pl = gl.pose.position();
            if (in_contact(old, pr) && in_contact(old, pl) && pushes_into(old, pr, disp.right) &&
                pushes_into(old, pl, disp.left)) {
                Vec3 d = 0.5 * (disp.right + disp.left);
                d.z() = 0.0;
                b.pose = b.pose.translated(d);
            }
        } else if (b.handling == Handling::bimanual_lift) {
            const RigidBody& old = w.body(b.id);
            const Vec3& pr = gr.pose.position();
            const Vec3& pl = gl.pose.position();
            if (!gr.open && !gl.open && in_contact(old, pr) && in_contact(old, pl) && antipodal(old, pr, pl)) {
                b.pose = b.pose.translated(0.5 * (disp.right + disp.left));
            }
        }
        body_disp[b.id] = b.pose.position() - before;
    }
    // Bodies resting on a moved support ride along; supports precede their
    // loads in the body list, so one ordered pass handles chains.
    for (RigidBody& b : out.bodies) {
        if (!b.supported_by || !body_disp[b.id].isZero(0.0)) continue;
        if (gr.attached == b.id || gl.attached == b.id) continue;
        const Vec3 d = body_disp[*b.supported_by];
        if (!d.isZero(0.0)) {
            b.pose = b.pose.translated(d);
            body_disp[b.id] = d;
        }
    }
    std::vector<std::string> anchor;
    for (RigidBody& b : out.bodies) {
        const bool held_r = gr.attached == b.id;
        const bool held_l = gl.attached == b.id;
        if (held_r && held_l) anchor.push_back(b.id);
        if (b.handling == Handling::fixed && !b.supported_by) continue;
        const double floor = out.table_height + half_height_world(b.shape, b.pose);
        if (b.pose.position().z() < floor) {
            b.pose = b.pose.translated(Vec3(0.0, 0.0, floor - b.pose.position().z()));
            if (held_r || held_l) anchor.push_back(b.id);
        }
    }
    for (const auto& id : anchor) reanchor(out, id);

    // Gripper actuation happens only at the commanded pose.
    for (Arm arm : kArms) {
        GripperState& g = out.grippers[arm];
        if (g.pose != cmd[arm].pose || g.open == cmd[arm].open) continue;
        if (cmd[arm].open) {
            g.open = true;
            g.attached.reset();
            continue;
        }
        g.open = false;
        const RigidBody* best = nullptr;
        double best_d = kGraspRadius;
        bool touching = false;
        for (const RigidBody& b : out.bodies) {
            const double d = signed_distance(b.shape, b.pose, g.pose.position());
            if (b.handling == Handling::bimanual_lift && d <= kGraspRadius) touching = true;
            if (b.graspable() && d <= best_d) {
                best = &b;
                best_d = d;
            }
        }
        if (best) {
            g.attached = best->id;
            out.body(best->id).supported_by.reset();
            reanchor(out, best->id);
        } else if (!touching) {
            out.grasp_missed = true;
        }
    }
    return out;
}

}  // namespace bimanual
