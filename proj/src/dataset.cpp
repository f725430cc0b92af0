#include "bimanual/harness.hpp"

#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "bimanual/binio.hpp"
#include "bimanual/codec.hpp"
#include "parallel.hpp"
#include "png_io.hpp"

namespace bimanual {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json pose_to_json(const Pose& p) {
    const Vec3& t = p.position();
    const Quat& q = p.orientation();
    return json::array({t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()});
}

Pose pose_from_json(const json& j) {
    if (!j.is_array() || j.size() != 7) throw ValidationError("pose must be an array of 7 numbers");
    const auto v = j.get<std::vector<double>>();
    return Pose(Vec3(v[0], v[1], v[2]), Quat(v[3], v[4], v[5], v[6]));
}

json camera_to_json(const CameraModel& c) {
    return {{"name", c.name}, {"width", c.width}, {"height", c.height}, {"fx", c.fx},
            {"fy", c.fy},     {"cx", c.cx},       {"cy", c.cy},         {"extrinsic", pose_to_json(c.extrinsic)}};
}

CameraModel camera_from_json(const json& j) {
    CameraModel c;
    c.name = j.at("name").get<std::string>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.extrinsic = pose_from_json(j.at("extrinsic"));
    c.validate();
    return c;
}

json grid_to_json(const GridSpec& g) {
    return {{"origin", {g.origin.x(), g.origin.y(), g.origin.z()}}, {"voxel_size", g.voxel_size}, {"dims", g.dims}};
}

GridSpec grid_from_json(const json& j) {
    GridSpec g;
    const auto o = j.at("origin").get<std::vector<double>>();
    if (o.size() != 3) throw ValidationError("grid origin must have 3 entries");
    g.origin = Vec3(o[0], o[1], o[2]);
    g.voxel_size = j.at("voxel_size").get<double>();
    g.dims = j.at("dims").get<std::array<int, 3>>();
    g.validate();
    return g;
}

json rig_to_json(const CameraRig& r) {
    json statics = json::array();
    for (const auto& c : r.static_cameras) statics.push_back(camera_to_json(c));
    return {{"static_cameras", statics},
            {"wrist", {{"width", r.width}, {"height", r.height}, {"fx", r.fx}, {"fy", r.fy}, {"cx", r.cx},
                       {"cy", r.cy}, {"mount", pose_to_json(r.wrist_mount)}}}};
}

CameraRig rig_from_json(const json& j) {
    CameraRig r;
    for (const auto& c : j.at("static_cameras")) r.static_cameras.push_back(camera_from_json(c));
    const json& w = j.at("wrist");
    r.width = w.at("width").get<int>();
    r.height = w.at("height").get<int>();
    r.fx = w.at("fx").get<double>();
    r.fy = w.at("fy").get<double>();
    r.cx = w.at("cx").get<double>();
    r.cy = w.at("cy").get<double>();
    r.wrist_mount = pose_from_json(w.at("mount"));
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    const std::string_view v(text);
    binio::write_file(path, {reinterpret_cast<const std::uint8_t*>(v.data()), v.size()});
}

json read_json(const fs::path& path) {
    const auto bytes = binio::read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

fs::path cam_dir(const fs::path& dir, const std::string& name) { return dir / ("cam_" + name); }
fs::path rgb_path(const fs::path& dir, const std::string& name, std::size_t step) {
    return cam_dir(dir, name) / ("rgb_" + std::to_string(step) + ".png");
}
fs::path depth_path(const fs::path& dir, const std::string& name, std::size_t step) {
    return cam_dir(dir, name) / ("depth_" + std::to_string(step) + ".bin");
}

CameraImage read_image(const fs::path& dir, const std::string& name, std::size_t step) {
    png::Image rgb = png::read_rgb(rgb_path(dir, name, step));
    const auto path = depth_path(dir, name, step);
    const auto bytes = binio::read_file(path);
    const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
    if (bytes.size() != 4 * n) {
        throw ValidationError(path.string() + ": expected " + std::to_string(4 * n) + " bytes, found " +
                              std::to_string(bytes.size()));
    }
    CameraImage img;
    img.width = rgb.width;
    img.height = rgb.height;
    img.rgb = std::move(rgb.rgb);
    img.depth.resize(n);
    binio::Reader r(bytes, path.string());
    for (auto& d : img.depth) d = r.f32();
    return img;
}

struct EpisodeHeader {
    std::string task_id;
    std::string goal;
    int variation = 0;
    std::uint64_t seed = 0;
    double duration_s = 0.0;
    std::vector<std::string> cameras;
};

EpisodeHeader read_episode_header(const fs::path& dir) {
    const json j = read_json(dir / "manifest.json");
    try {
        if (j.at("format_version").get<std::string>() != kDatasetFormatVersion) {
            throw ValidationError(dir.string() + ": unsupported format version " +
                                  j.at("format_version").get<std::string>());
        }
        EpisodeHeader h;
        h.task_id = j.at("task_id").get<std::string>();
        h.goal = j.at("goal").get<std::string>();
        h.variation = j.at("variation").get<int>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.duration_s = j.at("duration_s").get<double>();
        h.cameras = j.at("cameras").get<std::vector<std::string>>();
        return h;
    } catch (const json::exception& e) {
        throw ValidationError(dir.string() + "/manifest.json: " + e.what());
    }
}

std::vector<std::pair<double, BimanualAction>> read_steps(const fs::path& dir) {
    const auto path = dir / "steps.bin";
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes, path.string());
    const std::uint32_t count = r.u32();
    std::vector<std::pair<double, BimanualAction>> steps(count);
    for (auto& [time, action] : steps) {
        time = r.f64();
        for (Arm arm : kArms) {
            double v[7];
            for (double& x : v) x = r.f64();
            action[arm].pose = Pose(Vec3(v[0], v[1], v[2]), Quat(v[3], v[4], v[5], v[6]));
            action[arm].open = r.u8() != 0;
            action[arm].collide = r.u8() != 0;
        }
    }
    if (r.remaining() != 0) throw ValidationError(path.string() + ": trailing bytes");
    return steps;
}

Observation proprio_observation(const BimanualAction& a, std::size_t step, std::size_t count) {
    Observation obs;
    for (Arm arm : kArms) obs.proprio[arm] = {a[arm].open, a[arm].pose};
    obs.timestep_fraction = count > 1 ? static_cast<double>(step) / (count - 1) : 0.0;
    return obs;
}

}  // namespace

fs::path episode_dir(const fs::path& task_dir, std::size_t index) {
    return task_dir / ("episode_" + std::to_string(index));
}

void write_episode(const fs::path& dir, const Demonstration& demo) {
    const std::size_t n = demo.steps.size();
    if (n == 0) throw ValidationError("cannot write an empty demonstration");
    std::vector<std::string> cameras;
    for (const auto& [name, img] : demo.steps[0].observation.images) cameras.push_back(name);
    for (std::size_t t = 0; t < n; ++t) {
        const DemoStep& s = demo.steps[t];
        if (s.observation.proprio != proprio_observation(s.action, t, n).proprio ||
            s.observation.timestep_fraction != proprio_observation(s.action, t, n).timestep_fraction) {
            throw ValidationError("step " + std::to_string(t) + ": proprioception differs from the recorded action");
        }
        if (s.observation.images.size() != cameras.size()) {
            throw ValidationError("step " + std::to_string(t) + ": camera set differs from step 0");
        }
        for (const auto& name : cameras) {
            if (!s.observation.images.contains(name)) {
                throw ValidationError("step " + std::to_string(t) + ": missing camera " + name);
            }
        }
    }

    make_dirs(dir);
    json m = {{"format_version", kDatasetFormatVersion},
              {"task_id", demo.task_id},
              {"goal", demo.goal},
              {"variation", demo.variation_id},
              {"seed", demo.seed},
              {"duration_s", demo.duration_s},
              {"step_count", n},
              {"cameras", cameras}};
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    binio::Writer w;
    w.u32(static_cast<std::uint32_t>(n));
    for (const DemoStep& s : demo.steps) {
        w.f64(s.time_s);
        for (Arm arm : kArms) {
            const Pose& p = s.action[arm].pose;
            const Quat& q = p.orientation();
            for (double v : {p.position().x(), p.position().y(), p.position().z(), q.w(), q.x(), q.y(), q.z()}) {
                w.f64(v);
            }
            w.u8(s.action[arm].open ? 1 : 0);
            w.u8(s.action[arm].collide ? 1 : 0);
        }
    }
    binio::write_file(dir / "steps.bin", w.data());

    for (const auto& name : cameras) make_dirs(cam_dir(dir, name));
    for (std::size_t t = 0; t < n; ++t) {
        for (const auto& [name, img] : demo.steps[t].observation.images) {
            png::write_rgb(rgb_path(dir, name, t), img.width, img.height, img.rgb);
            binio::Writer d;
            for (float v : img.depth) d.f32(v);
            binio::write_file(depth_path(dir, name, t), d.data());
        }
    }
}

std::vector<BimanualAction> read_actions(const fs::path& dir) {
    std::vector<BimanualAction> out;
    for (auto& [time, action] : read_steps(dir)) out.push_back(action);
    return out;
}

Demonstration read_episode(const fs::path& dir) {
    const EpisodeHeader h = read_episode_header(dir);
    const auto steps = read_steps(dir);
    Demonstration demo;
    demo.task_id = h.task_id;
    demo.goal = h.goal;
    demo.variation_id = h.variation;
    demo.seed = h.seed;
    demo.duration_s = h.duration_s;
    const std::size_t n = steps.size();
    for (std::size_t t = 0; t < n; ++t) {
        DemoStep s;
        s.time_s = steps[t].first;
        s.action = steps[t].second;
        s.observation = proprio_observation(s.action, t, n);
        for (const auto& name : h.cameras) s.observation.images[name] = read_image(dir, name, t);
        demo.steps.push_back(std::move(s));
    }
    return demo;
}

void write_manifest(const fs::path& task_dir, const DatasetManifest& m) {
    json eps = json::array();
    for (const auto& e : m.episodes) {
        eps.push_back({{"index", e.index},
                       {"seed", e.seed},
                       {"variation", e.variation},
                       {"goal", e.goal},
                       {"success", e.success},
                       {"duration_s", e.duration_s},
                       {"keyframe_count", e.keyframe_count},
                       {"step_count", e.step_count},
                       {"dir", episode_dir(fs::path(), e.index).string()}});
    }
    const json j = {{"format_version", m.format_version},
                    {"task_id", m.task_id},
                    {"seed", m.seed},
                    {"episode_count", m.episodes.size()},
                    {"grid", grid_to_json(m.grid)},
                    {"rig", rig_to_json(m.rig)},
                    {"images", m.images},
                    {"script_failures", m.script_failures},
                    {"episodes", eps}};
    make_dirs(task_dir);
    write_text(task_dir / "manifest.json", j.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& task_dir) {
    const fs::path path = task_dir / "manifest.json";
    const json j = read_json(path);
    DatasetManifest m;
    try {
        m.format_version = j.at("format_version").get<std::string>();
        if (m.format_version != kDatasetFormatVersion) {
            throw ValidationError(path.string() + ": unsupported format version '" + m.format_version + "'");
        }
        m.task_id = j.at("task_id").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.grid = grid_from_json(j.at("grid"));
        m.rig = rig_from_json(j.at("rig"));
        m.images = j.at("images").get<bool>();
        m.script_failures = j.at("script_failures").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    const json* eps = j.contains("episodes") ? &j.at("episodes") : nullptr;
    if (!eps || !eps->is_array()) throw ValidationError(path.string() + ": missing episode list");
    for (std::size_t i = 0; i < eps->size(); ++i) {
        const json& e = (*eps)[i];
        const std::string who = path.string() + ": episode " + std::to_string(i);
        EpisodeRecord r;
        try {
            r.index = e.at("index").get<std::size_t>();
            r.seed = e.at("seed").get<std::uint64_t>();
            r.variation = e.at("variation").get<int>();
            r.goal = e.at("goal").get<std::string>();
            r.success = e.at("success").get<bool>();
            r.duration_s = e.at("duration_s").get<double>();
            r.keyframe_count = e.at("keyframe_count").get<std::size_t>();
            r.step_count = e.at("step_count").get<std::size_t>();
        } catch (const json::exception& ex) {
            throw ValidationError(who + ": " + ex.what());
        }
        if (r.index != i) throw ValidationError(who + ": index field is " + std::to_string(r.index));
        if (!(r.duration_s >= 0.0) || r.keyframe_count == 0 || r.step_count < 2) {
            throw ValidationError(who + ": implausible duration, keyframe or step count");
        }
        if (!fs::is_directory(episode_dir(task_dir, i))) {
            throw ValidationError(who + ": directory " + episode_dir(task_dir, i).string() + " is missing");
        }
        m.episodes.push_back(std::move(r));
    }
    if (j.contains("episode_count") && j.at("episode_count") != m.episodes.size()) {
        throw ValidationError(path.string() + ": episode_count disagrees with the episode list");
    }
    return m;
}

std::vector<CameraModel> step_cameras(const CameraRig& rig, const Observation& obs) {
    return rig_cameras(rig, PerArm<Pose>{obs.proprio.right.ee_pose, obs.proprio.left.ee_pose});
}

DatasetManifest generate_dataset(const TaskSpec& task, std::size_t n, std::uint64_t seed, const fs::path& out_root,
                                 const GenerateOptions& options) {
    const fs::path task_dir = out_root / task.name;
    make_dirs(task_dir);

    struct Chosen {
        std::uint64_t seed;
        int variation;
    };
    std::vector<Chosen> chosen;
    std::size_t failures = 0;
    for (std::uint64_t attempt = 0; chosen.size() < n; ++attempt) {
        const std::uint64_t s = split_seed(seed, attempt);
        const int v = variation_for_seed(task, s);
        const ResetResult r = reset(task, v, s);
        if (expert(task, r.world).success) {
            chosen.push_back({s, v});
            continue;
        }
        ++failures;
        std::clog << "expert failed on " << task.name << " seed " << s << ", re-seeding\n";
        if (failures > 10 * n) {
            throw ValidationError("aborting " + task.name + ": " + std::to_string(failures) + " script failures");
        }
    }

    DatasetManifest m;
    m.task_id = task.name;
    m.seed = seed;
    m.grid = workspace_grid();
    m.rig = options.rig;
    m.images = options.images;
    m.script_failures = failures;
    m.episodes.resize(n);
    ExpertOptions eo;
    eo.render = options.images;
    eo.rig = options.rig;
    detail::parallel_for(n, options.threads, [&](std::size_t i) {
        const ResetResult r = reset(task, chosen[i].variation, chosen[i].seed);
        const ExpertResult e = expert(task, r.world, eo);
        write_episode(episode_dir(task_dir, i), e.demo);
        EpisodeRecord& rec = m.episodes[i];
        rec.index = i;
        rec.seed = chosen[i].seed;
        rec.variation = chosen[i].variation;
        rec.goal = e.demo.goal;
        rec.success = e.success;
        rec.duration_s = e.demo.duration_s;
        rec.keyframe_count = extract_keyframes(e.demo).indices.size();
        rec.step_count = e.demo.steps.size();
    });
    write_manifest(task_dir, m);
    return m;
}

void write_targets(const fs::path& path, const EpisodeTargets& t) {
    binio::Writer w;
    w.magic("BTGT");
    w.u32(kTargetsVersion);
    for (int d : t.dims) w.i32(d);
    w.u32(static_cast<std::uint32_t>(t.keyframes.size()));
    GridSpec g;
    g.dims = t.dims;
    for (const auto& k : t.keyframes) {
        w.u32(k.step);
        for (Arm arm : kArms) {
            const DiscreteArmAction& a = k.action[arm];
            w.u32(static_cast<std::uint32_t>(a.trans.i));
            w.u32(static_cast<std::uint32_t>(a.trans.j));
            w.u32(static_cast<std::uint32_t>(a.trans.k));
            w.u32(g.flat(a.trans));
            for (int b : a.rot_bins) w.u32(static_cast<std::uint32_t>(b));
            w.u8(a.open ? 1 : 0);
            w.u8(a.collide ? 1 : 0);
        }
    }
    binio::write_file(path, w.data());
}

EpisodeTargets read_targets(const fs::path& path) {
    const auto bytes = binio::read_file(path);
    binio::Reader r(bytes, path.string());
    if (!r.magic("BTGT")) throw ValidationError(path.string() + ": not a targets file");
    const std::uint32_t version = r.u32();
    if (version != kTargetsVersion) {
        throw ValidationError(path.string() + ": unsupported targets version " + std::to_string(version));
    }
    EpisodeTargets t;
    for (int& d : t.dims) d = r.i32();
    GridSpec g;
    g.dims = t.dims;
    g.validate();
    t.keyframes.resize(r.u32());
    for (auto& k : t.keyframes) {
        k.step = r.u32();
        for (Arm arm : kArms) {
            DiscreteArmAction& a = k.action[arm];
            a.trans.i = static_cast<int>(r.u32());
            a.trans.j = static_cast<int>(r.u32());
            a.trans.k = static_cast<int>(r.u32());
            const std::uint32_t flat = r.u32();
            for (int& b : a.rot_bins) b = static_cast<int>(r.u32());
            a.open = r.u8() != 0;
            a.collide = r.u8() != 0;
            validate_discrete(a, g);
            if (g.flat(a.trans) != flat) throw ValidationError(path.string() + ": flat index mismatch");
        }
    }
    if (r.remaining() != 0) throw ValidationError(path.string() + ": trailing bytes");
    return t;
}

EpisodeTargets make_episode_targets(const std::vector<BimanualAction>& actions, const GridSpec& grid,
                                    const TargetOptions& options, std::size_t episode) {
    const KeyframeSet ks = extract_keyframes(actions, options.keyframes);
    std::vector<BimanualAction> kf;
    for (std::size_t idx : ks.indices) kf.push_back(actions[idx]);

    auto encode_all = [&](const std::vector<BimanualAction>& as) {
        std::vector<DiscreteBimanualAction> out;
        for (const auto& a : as) out.push_back(encode(a, grid));
        return out;
    };
    std::vector<DiscreteBimanualAction> encoded;
    bool done = false;
    if (options.augment) {
        options.augment->validate();
        const VoxelGrid empty(grid);
        for (int attempt = 0; attempt < options.max_augment_attempts && !done; ++attempt) {
            PerturbSpec spec = *options.augment;
            spec.rng_seed = split_seed(split_seed(options.augment->rng_seed, episode), attempt);
            const PerturbResult p = apply_perturbation(empty, kf, sample_perturbation(spec, grid));
            try {
                encoded = encode_all(p.actions);
                done = true;
            } catch (const EncodeError&) {
                // redraw
            }
        }
    }
    if (!done) encoded = encode_all(kf);

    EpisodeTargets t;
    t.dims = grid.dims;
    for (std::size_t i = 0; i < ks.indices.size(); ++i) {
        t.keyframes.push_back({static_cast<std::uint32_t>(ks.indices[i]), encoded[i]});
    }
    return t;
}

std::size_t write_dataset_targets(const fs::path& task_dir, const fs::path& out_dir, const TargetOptions& options) {
    const DatasetManifest m = read_manifest(task_dir);
    make_dirs(out_dir);
    for (const auto& e : m.episodes) {
        const auto actions = read_actions(episode_dir(task_dir, e.index));
        write_targets(out_dir / ("episode_" + std::to_string(e.index) + ".targets.bin"),
                      make_episode_targets(actions, m.grid, options, e.index));
    }
    return m.episodes.size();
}

std::vector<NnSample> load_nn_samples(const fs::path& task_dir, const KeyframeParams& params) {
    const DatasetManifest m = read_manifest(task_dir);
    if (!m.images) throw ValidationError(task_dir.string() + ": dataset was written without camera images");
    std::vector<NnSample> samples;
    for (const auto& e : m.episodes) {
        const fs::path dir = episode_dir(task_dir, e.index);
        const EpisodeHeader h = read_episode_header(dir);
        const auto actions = read_actions(dir);
        const KeyframeSet ks = extract_keyframes(actions, params);
        for (std::size_t slot = 0; slot < ks.indices.size(); ++slot) {
            const std::size_t query_step = slot == 0 ? 0 : ks.indices[slot - 1];
            Observation obs = proprio_observation(actions[query_step], query_step, actions.size());
            for (const auto& name : h.cameras) obs.images[name] = read_image(dir, name, query_step);
            const VoxelGrid grid = fuse(obs, step_cameras(m.rig, obs), m.grid);
            samples.push_back({h.goal, grid.occupancy_bits(), encode(actions[ks.indices[slot]], m.grid), e.index, slot});
        }
    }
    return samples;
}

}  // namespace bimanual
