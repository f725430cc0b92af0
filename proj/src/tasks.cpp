#include "bimanual/simworld.hpp"

#include "bimanual/codec.hpp"

#include <algorithm>
#include <cmath>

namespace bimanual {

GridSpec workspace_grid() {
    GridSpec g;
    g.origin = Vec3(-0.3, -0.5, 0.6);
    g.voxel_size = 0.01;
    g.dims = {100, 100, 100};
    return g;
}

namespace {

constexpr Rgb kTableColor{140, 110, 80};
constexpr Rgb kBoxColor{170, 120, 60};
constexpr Rgb kRed{220, 30, 30};
constexpr Rgb kBallColor{40, 110, 220};
constexpr Rgb kBaseColor{110, 110, 110};
constexpr Rgb kTrayColor{205, 205, 205};
constexpr Rgb kHolderColor{90, 70, 50};
constexpr Rgb kTrayItemColor{230, 120, 20};

struct NamedColor {
    const char* name;
    Rgb rgb;
};
constexpr std::array<NamedColor, 4> kButtonPalette{{
    {"red", {220, 30, 30}},
    {"green", {30, 180, 60}},
    {"blue", {30, 60, 220}},
    {"yellow", {230, 210, 30}},
}};

Rgb palette_color(const std::string& name) {
    for (const auto& c : kButtonPalette) {
        if (name == c.name) return c.rgb;
    }
    throw ConfigError("unknown colour " + name);
}

std::vector<TaskSpec> build_tasks() {
    std::vector<TaskSpec> tasks;
    tasks.push_back({TaskId::push_box, "push_box", 'a', "push box", "push the box to the red area",
                     {{"default", {}}}, {true, true, false, true, true}, {4.33, 2.1, 1, 1}, 1, false});
    tasks.push_back({TaskId::lift_ball, "lift_ball", 'b', "lift a ball", "lift the ball",
                     {{"default", {}}}, {true, true, true, true, true}, {4.40, 4.0, 1, 1}, 1, false});
    tasks.push_back({TaskId::push_buttons, "push_buttons", 'c', "push two buttons",
                     "push the {A} and the {B} button",
                     {{"red+green", {"red", "green"}},
                      {"red+blue", {"red", "blue"}},
                      {"green+blue", {"green", "blue"}},
                      {"red+yellow", {"red", "yellow"}},
                      {"blue+yellow", {"blue", "yellow"}}},
                     {true, false, false, true, false}, {3.47, 4.0, 3, 5}, 3, false});
    tasks.push_back({TaskId::lift_tray, "lift_tray", 'k', "lift tray", "lift the tray",
                     {{"default", {}}}, {true, true, true, true, true}, {3.77, 5.1, 1, 1}, 1, false});
    tasks.push_back({TaskId::handover_easy, "handover_easy", 'l', "handover item (easy)", "handover the item",
                     {{"default", {}}}, {true, true, true, false, false}, {7.17, 7.5, 1, 1}, 1, true});
    return tasks;
}

std::vector<CatalogEntry> build_catalog() {
    std::vector<CatalogEntry> rows;
    for (const auto& t : implemented_tasks()) {
        std::string metric;
        switch (t.id) {
            case TaskId::push_box: metric = "box center inside the target area"; break;
            case TaskId::lift_ball: metric = "ball center above 0.95 m"; break;
            case TaskId::push_buttons: metric = "both named buttons pressed at the same step"; break;
            case TaskId::lift_tray: metric = "tray and the item on it above 1.2 m"; break;
            case TaskId::handover_easy: metric = "item held by the left arm above 0.8 m, right arm open and empty"; break;
        }
        rows.push_back({t.letter, t.name, t.title, t.taxonomy, t.reference, metric, true});
    }
    auto spec_only = [&](char letter, const char* name, const char* title, Taxonomy tax, TaskReference ref,
                         const char* metric) { rows.push_back({letter, name, title, tax, ref, metric, false}); };
    spec_only('d', "pick_up_plate", "pick up a plate", {true, true, true, false, false}, {6.47, 6.6, 1, 1},
              "plate grasped and lifted");
    spec_only('e', "put_item_in_drawer", "put item in drawer", {true, false, false, false, false},
              {5.57, 8.4, 5, 3}, "item inside the named drawer");
    spec_only('f', "put_bottle_in_fridge", "put bottle in fridge", {true, false, false, false, false},
              {9.70, 7.8, 2, 1}, "bottle inside the fridge");
    spec_only('g', "handover_item", "handover an item", {true, true, true, false, true}, {7.63, 7.6, 5, 5},
              "named item held above 0.8 m with the other arm idle");
    spec_only('h', "pick_up_notebook", "pick up notebook", {true, true, true, false, false}, {3.97, 7.2, 1, 1},
              "notebook grasped and lifted off its block");
    spec_only('i', "straighten_rope", "straighten rope", {true, true, true, false, true}, {3.83, 5.9, 1, 1},
              "both rope ends inside their target areas");
    spec_only('j', "sweep_to_dustpan", "sweep dust pan", {true, true, true, false, false}, {4.93, 7.3, 1, 1},
              "all dust inside the dust pan");
    spec_only('m', "take_tray_out_of_oven", "take tray out of oven", {true, false, false, false, false},
              {10.13, 8.7, 2, 1}, "tray lifted above the oven");
    std::sort(rows.begin(), rows.end(), [](const CatalogEntry& a, const CatalogEntry& b) { return a.letter < b.letter; });
    return rows;
}

RigidBody make_body(std::string id, Shape shape, Vec3 pos, double mass, Rgb color, Handling handling) {
    RigidBody b;
    b.id = std::move(id);
    b.shape = shape;
    b.pose = Pose(pos);
    b.mass_kg = mass;
    b.color = color;
    b.handling = handling;
    return b;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
    return s;
}

}  // namespace

const std::vector<TaskSpec>& implemented_tasks() {
    static const std::vector<TaskSpec> tasks = build_tasks();
    return tasks;
}

const std::vector<CatalogEntry>& task_catalog() {
    static const std::vector<CatalogEntry> rows = build_catalog();
    return rows;
}

const TaskSpec& task_spec(std::string_view name) {
    for (const auto& t : implemented_tasks()) {
        if (t.name == name) return t;
    }
    for (const auto& row : task_catalog()) {
        if (row.name == name) throw ConfigError("task '" + std::string(name) + "' is documented but not simulated");
    }
    throw ConfigError("unknown task '" + std::string(name) + "'");
}

const TaskSpec& task_spec(TaskId id) {
    for (const auto& t : implemented_tasks()) {
        if (t.id == id) return t;
    }
    throw ConfigError("unknown task id");
}

int variation_for_seed(const TaskSpec& task, std::uint64_t seed) {
    return static_cast<int>(splitmix64(seed ^ 0x5EEDF00DULL) % task.variations.size());
}

ResetResult reset(const TaskSpec& task, int variation, std::uint64_t seed) {
    if (variation < 0 || variation >= static_cast<int>(task.variations.size())) {
        throw ConfigError("task " + task.name + " has no variation " + std::to_string(variation));
    }
    Rng rng(seed);
    const GridSpec grid = workspace_grid();
    const Quat down = quat_from_axis_angle_deg(Vec3::UnitX(), 180.0);

    ResetResult out;
    WorldState& w = out.world;
    w.task = task.id;
    w.variation = variation;
    w.seed = seed;
    w.bodies.push_back(make_body("table", BoxShape{Vec3(0.5, 0.5, 0.025)}, Vec3(0.2, 0.0, kTableHeight - 0.025),
                                 30.0, kTableColor, Handling::fixed));
    for (Arm arm : kArms) {
        GripperState& g = w.grippers[arm];
        g.arm = arm;
        const double y = arm == Arm::right ? -0.25 : 0.25;
        g.pose = snap_pose(Pose(Vec3(-0.05, y, 1.15), down), grid);
        g.open = true;
    }
    out.goal = task.language_template;

    const double table = kTableHeight;
    switch (task.id) {
        case TaskId::push_box: {
            const double half = 0.08;
            const Vec3 box(rng.uniform(0.12, 0.22), rng.uniform(-0.10, 0.10), table + half);
            const Vec3 target(box.x() + rng.uniform(0.16, 0.22), box.y() + rng.uniform(-0.04, 0.04), table + 0.001);
            w.bodies.push_back(make_body("box", BoxShape{Vec3::Constant(half)}, box, 50.0, kBoxColor,
                                         Handling::bimanual_push));
            w.bodies.push_back(make_body("target_area", BoxShape{Vec3(0.075, 0.075, 0.001)}, target, 0.01, kRed,
                                         Handling::fixed));
            w.target_ids = {"target_area"};
            break;
        }
        case TaskId::lift_ball: {
            const double r = 0.10;
            const Vec3 c(rng.uniform(0.15, 0.30), rng.uniform(-0.08, 0.08), table + r);
            w.bodies.push_back(make_body("ball", SphereShape{r}, c, 2.0, kBallColor, Handling::bimanual_lift));
            break;
        }
        case TaskId::push_buttons: {
            const Vec3 base(rng.uniform(0.18, 0.30), rng.uniform(-0.05, 0.05), table + 0.01);
            w.bodies.push_back(make_body("button_base", BoxShape{Vec3(0.06, 0.28, 0.01)}, base, 1.0, kBaseColor,
                                         Handling::fixed));
            const auto& targets = task.variations[variation].colors;
            std::vector<std::string> others;
            for (const auto& c : kButtonPalette) {
                if (std::find(targets.begin(), targets.end(), c.name) == targets.end()) others.emplace_back(c.name);
            }
            std::vector<std::string> slots{targets[0], targets[1], others[rng.index(others.size())]};
            // Fisher-Yates with the portable generator.
            for (std::size_t i = slots.size() - 1; i > 0; --i) std::swap(slots[i], slots[rng.index(i + 1)]);
            const std::array<double, 3> offsets{-0.18, 0.0, 0.18};
            for (std::size_t s = 0; s < slots.size(); ++s) {
                const Vec3 c(base.x(), base.y() + offsets[s], table + 0.03);
                w.bodies.push_back(make_body("button_" + slots[s], CylinderShape{0.03, 0.01}, c, 0.1,
                                             palette_color(slots[s]), Handling::fixed));
                w.bodies.back().supported_by = "button_base";
            }
            w.target_ids = {"button_" + targets[0], "button_" + targets[1]};
            out.goal = replace_all(replace_all(task.language_template, "{A}", targets[0]), "{B}", targets[1]);
            break;
        }
        case TaskId::lift_tray: {
            const Vec3 holder(rng.uniform(0.18, 0.30), rng.uniform(-0.05, 0.05), table + 0.07);
            w.bodies.push_back(make_body("holder", BoxShape{Vec3(0.06, 0.06, 0.07)}, holder, 3.0, kHolderColor,
                                         Handling::fixed));
            const Vec3 tray(holder.x(), holder.y(), table + 0.15);
            w.bodies.push_back(make_body("tray", BoxShape{Vec3(0.10, 0.16, 0.01)}, tray, 1.0, kTrayColor,
                                         Handling::bimanual_lift));
            w.bodies.back().supported_by = "holder";
            const Vec3 item(tray.x() + rng.uniform(-0.03, 0.03), tray.y() + rng.uniform(-0.05, 0.05),
                            tray.z() + 0.01 + 0.025);
            w.bodies.push_back(make_body("tray_item", BoxShape{Vec3::Constant(0.025)}, item, 0.2, kTrayItemColor,
                                         Handling::fixed));
            w.bodies.back().supported_by = "tray";
            w.target_ids = {"tray", "tray_item"};
            break;
        }
        case TaskId::handover_easy: {
            const Vec3 item(rng.uniform(0.18, 0.30), rng.uniform(-0.16, -0.08), table + 0.025);
            w.bodies.push_back(make_body("item", BoxShape{Vec3(0.025, 0.10, 0.025)}, item, 0.2, kRed,
                                         Handling::grasp));
            w.target_ids = {"item"};
            break;
        }
    }
    return out;
}

bool button_pressed(const WorldState& w, std::string_view button_id) {
    const RigidBody& b = w.body(button_id);
    const auto* cyl = std::get_if<CylinderShape>(&b.shape);
    if (!cyl) throw ConfigError("body " + b.id + " is not a button");
    const double top = b.pose.position().z() + cyl->half_height;
    for (Arm arm : kArms) {
        const Vec3& p = w.grippers[arm].pose.position();
        const double horizontal = (p - b.pose.position()).head<2>().norm();
        const double above = p.z() - top;
        if (horizontal <= cyl->radius && above >= 0.0 && above <= kPressHeight) return true;
    }
    return false;
}

bool success(const WorldState& w, const TaskSpec& task) {
    if (w.task != task.id) throw ConfigError("world does not belong to task " + task.name);
    switch (task.id) {
        case TaskId::push_box: {
            const RigidBody& box = w.body("box");
            const RigidBody& area = w.body("target_area");
            const Vec3 half = std::get<BoxShape>(area.shape).half_extents;
            const Vec3 d = box.pose.position() - area.pose.position();
            return std::abs(d.x()) <= half.x() && std::abs(d.y()) <= half.y();
        }
        case TaskId::lift_ball:
            return w.body("ball").pose.position().z() > 0.95;
        case TaskId::push_buttons:
            return std::all_of(w.target_ids.begin(), w.target_ids.end(),
                               [&](const std::string& id) { return button_pressed(w, id); });
        case TaskId::lift_tray: {
            const RigidBody& tray = w.body("tray");
            const RigidBody& item = w.body("tray_item");
            const Vec3 half = std::get<BoxShape>(tray.shape).half_extents;
            const Vec3 rel = tray.pose.orientation().conjugate() * (item.pose.position() - tray.pose.position());
            const bool on_tray = std::abs(rel.x()) <= half.x() && std::abs(rel.y()) <= half.y() && rel.z() >= 0.0;
            return on_tray && tray.pose.position().z() > 1.2 && item.pose.position().z() > 1.2;
        }
        case TaskId::handover_easy: {
            const RigidBody& item = w.body("item");
            const GripperState& holder = w.grippers.left;
            const GripperState& idle = w.grippers.right;
            const bool held = !holder.open && holder.attached == item.id;
            const bool right_idle = idle.open && !idle.attached;
            return held && right_idle && item.pose.position().z() > 0.8;
        }
    }
    return false;
}

}  // namespace bimanual
