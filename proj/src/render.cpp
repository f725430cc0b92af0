#include "bimanual/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bimanual {

namespace {

constexpr Rgb kGripperColor{70, 70, 70};
constexpr double kFingerOpenOffset = 0.04;
constexpr double kFingerClosedOffset = 0.012;
const Vec3 kFingerHalf(0.008, 0.008, 0.025);
const Vec3 kPalmHalf(0.015, 0.055, 0.012);

const Vec3 kLookTarget(0.2, 0.0, 0.8);

// A shape placed in the world, with its inverse pose cached for ray tests.
struct Primitive {
    Shape shape;
    Pose inv;
    Rgb color;
    Vec3 center;
    double bound_radius = 0.0;
};

double bounding_radius(const Shape& shape) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SphereShape>) {
                return s.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                return s.half_extents.norm();
            } else {
                return std::hypot(s.radius, s.half_height);
            }
        },
        shape);
}

Primitive make_primitive(const Shape& shape, const Pose& pose, Rgb color) {
    return {shape, pose.inverse(), color, pose.position(), bounding_radius(shape)};
}

// Smallest t > eps with o + t*d on the surface, in the shape's local frame.
constexpr double kNoHit = std::numeric_limits<double>::infinity();
constexpr double kMinT = 1e-9;

double hit_box(const Vec3& half, const Vec3& o, const Vec3& d) {
    double t0 = -kNoHit;
    double t1 = kNoHit;
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (std::abs(o[a]) > half[a]) return kNoHit;
            continue;
        }
        double ta = (-half[a] - o[a]) / d[a];
        double tb = (half[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return kNoHit;
    }
    if (t0 > kMinT) return t0;
    return t1 > kMinT ? t1 : kNoHit;
}

double hit_sphere(double r, const Vec3& o, const Vec3& d) {
    const double a = d.squaredNorm();
    const double b = o.dot(d);
    const double c = o.squaredNorm() - r * r;
    const double disc = b * b - a * c;
    if (disc < 0.0) return kNoHit;
    const double s = std::sqrt(disc);
    const double t0 = (-b - s) / a;
    if (t0 > kMinT) return t0;
    const double t1 = (-b + s) / a;
    return t1 > kMinT ? t1 : kNoHit;
}

double hit_cylinder(double r, double h, const Vec3& o, const Vec3& d) {
    double best = kNoHit;
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 0.0) {
        const double b = o.x() * d.x() + o.y() * d.y();
        const double c = o.x() * o.x() + o.y() * o.y() - r * r;
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            for (double t : {(-b - s) / a, (-b + s) / a}) {
                if (t > kMinT && t < best && std::abs(o.z() + t * d.z()) <= h) best = t;
            }
        }
    }
    if (d.z() != 0.0) {
        for (double zc : {-h, h}) {
            const double t = (zc - o.z()) / d.z();
            if (t > kMinT && t < best) {
                const double x = o.x() + t * d.x();
                const double y = o.y() + t * d.y();
                if (x * x + y * y <= r * r) best = t;
            }
        }
    }
    return best;
}

double intersect(const Primitive& p, const Vec3& origin, const Vec3& dir) {
    const Vec3 o = p.inv.transform_point(origin);
    const Vec3 d = p.inv.orientation() * dir;
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SphereShape>) {
                return hit_sphere(s.radius, o, d);
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                return hit_box(s.half_extents, o, d);
            } else {
                return hit_cylinder(s.radius, s.half_height, o, d);
            }
        },
        p.shape);
}

std::vector<Primitive> scene_primitives(const WorldState& w) {
    std::vector<Primitive> prims;
    for (const RigidBody& b : w.bodies) prims.push_back(make_primitive(b.shape, b.pose, b.color));
    for (Arm arm : kArms) {
        const GripperState& g = w.grippers[arm];
        const double s = g.open ? kFingerOpenOffset : kFingerClosedOffset;
        for (double side : {-1.0, 1.0}) {
            const Pose finger = pose_compose(g.pose, Pose(Vec3(0.0, side * s, -kFingerHalf.z())));
            prims.push_back(make_primitive(BoxShape{kFingerHalf}, finger, kGripperColor));
        }
        const Pose palm = pose_compose(g.pose, Pose(Vec3(0.0, 0.0, -0.062)));
        prims.push_back(make_primitive(BoxShape{kPalmHalf}, palm, kGripperColor));
    }
    return prims;
}

struct PixelRect {
    int u0, u1, v0, v1;  // inclusive
};

// Conservative screen rectangle of a bounding sphere given in camera
// coordinates; the whole image when the sphere reaches the image plane.
PixelRect screen_rect(const CameraModel& cam, const Vec3& c, double r) {
    const PixelRect full{0, cam.width - 1, 0, cam.height - 1};
    if (c.z() - r <= 1e-3) return full;
    const double z_near = c.z() - r;
    const double z_far = c.z() + r;
    auto range = [&](double lo, double hi) {
        const double cands[4] = {lo / z_near, lo / z_far, hi / z_near, hi / z_far};
        return std::pair(*std::min_element(cands, cands + 4), *std::max_element(cands, cands + 4));
    };
    const auto [xl, xh] = range(c.x() - r, c.x() + r);
    const auto [yl, yh] = range(c.y() - r, c.y() + r);
    PixelRect rect;
    rect.u0 = static_cast<int>(std::max(0.0, std::floor(cam.cx + cam.fx * xl)));
    rect.u1 = static_cast<int>(std::min(cam.width - 1.0, std::ceil(cam.cx + cam.fx * xh)));
    rect.v0 = static_cast<int>(std::max(0.0, std::floor(cam.cy + cam.fy * yl)));
    rect.v1 = static_cast<int>(std::min(cam.height - 1.0, std::ceil(cam.cy + cam.fy * yh)));
    return rect;
}

CameraImage render_camera(const std::vector<Primitive>& prims, const CameraModel& cam) {
    cam.validate();
    const auto n = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
    CameraImage img;
    img.width = cam.width;
    img.height = cam.height;
    img.rgb.assign(3 * n, 0);
    img.depth.assign(n, kInvalidDepth);
    std::vector<double> zbuf(n, kNoHit);

    const Mat3 rot = cam.extrinsic.rotation();
    const Vec3& eye = cam.extrinsic.position();
    const Pose to_cam = cam.extrinsic.inverse();
    for (const Primitive& p : prims) {
        const PixelRect rect = screen_rect(cam, to_cam.transform_point(p.center), p.bound_radius);
        for (int v = rect.v0; v <= rect.v1; ++v) {
            for (int u = rect.u0; u <= rect.u1; ++u) {
                // Direction with unit camera-z, so t is the z-depth.
                const Vec3 dir = rot * Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
                const double t = intersect(p, eye, dir);
                const std::size_t px = static_cast<std::size_t>(v) * cam.width + u;
                if (t < zbuf[px]) {
                    zbuf[px] = t;
                    img.rgb[3 * px] = p.color.r;
                    img.rgb[3 * px + 1] = p.color.g;
                    img.rgb[3 * px + 2] = p.color.b;
                }
            }
        }
    }
    for (std::size_t px = 0; px < n; ++px) {
        if (zbuf[px] < kNoHit) img.depth[px] = static_cast<float>(zbuf[px]);
    }
    return img;
}

}  // namespace

Pose look_at(const Vec3& eye, const Vec3& target) {
    const Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(Vec3::UnitZ());
    if (x.norm() < 1e-9) x = Vec3::UnitX();  // looking straight up or down
    x.normalize();
    const Vec3 y = z.cross(x);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return Pose(eye, Quat(r));
}

CameraRig default_rig(int resolution) {
    if (resolution <= 0) throw ConfigError("camera resolution must be positive");
    CameraRig rig;
    rig.width = resolution;
    rig.height = resolution;
    rig.fx = rig.fy = 0.5 * resolution / std::tan(deg2rad(30.0));
    rig.cx = rig.cy = 0.5 * resolution;
    auto add = [&](const char* name, const Vec3& eye) {
        CameraModel cam;
        cam.name = name;
        cam.width = cam.height = resolution;
        cam.fx = rig.fx;
        cam.fy = rig.fy;
        cam.cx = rig.cx;
        cam.cy = rig.cy;
        cam.extrinsic = look_at(eye, kLookTarget);
        rig.static_cameras.push_back(cam);
    };
    add("front", Vec3(1.3, 0.0, 1.45));
    add("left_shoulder", Vec3(0.1, 0.9, 1.5));
    add("right_shoulder", Vec3(0.1, -0.9, 1.5));
    // Behind the fingers, looking along the approach axis.
    rig.wrist_mount = Pose(Vec3(0.06, 0.0, -0.10));
    return rig;
}

std::vector<CameraModel> rig_cameras(const CameraRig& rig, const PerArm<Pose>& ee_poses) {
    std::vector<CameraModel> cams = rig.static_cameras;
    for (Arm arm : kArms) {
        CameraModel cam;
        cam.name = std::string(arm_name(arm)) + "_wrist";
        cam.width = rig.width;
        cam.height = rig.height;
        cam.fx = rig.fx;
        cam.fy = rig.fy;
        cam.cx = rig.cx;
        cam.cy = rig.cy;
        cam.extrinsic = pose_compose(ee_poses[arm], rig.wrist_mount);
        cams.push_back(cam);
    }
    return cams;
}

std::vector<CameraModel> rig_cameras(const CameraRig& rig, const WorldState& w) {
    return rig_cameras(rig, PerArm<Pose>{w.grippers.right.pose, w.grippers.left.pose});
}

Observation render(const WorldState& w, std::span<const CameraModel> cams) {
    const std::vector<Primitive> prims = scene_primitives(w);
    Observation obs;
    for (const CameraModel& cam : cams) obs.images[cam.name] = render_camera(prims, cam);
    for (Arm arm : kArms) {
        obs.proprio[arm].gripper_open = w.grippers[arm].open;
        obs.proprio[arm].ee_pose = w.grippers[arm].pose;
    }
    return obs;
}

}  // namespace bimanual
