// Command-line front end: dataset generation, keyframes, voxelization,
// training targets, evaluation and statistics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bimanual/agents.hpp"
#include "bimanual/binio.hpp"
#include "bimanual/harness.hpp"

namespace fs = std::filesystem;
using namespace bimanual;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    binio::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// Accepts either a task directory or a root holding <task>/manifest.json.
fs::path task_dir_for(const fs::path& dir, const std::string& task) {
    if (fs::exists(dir / "manifest.json")) return dir;
    if (!task.empty() && fs::exists(dir / task / "manifest.json")) return dir / task;
    throw IoError("no dataset manifest under " + dir.string());
}

std::string taxonomy_flags(const Taxonomy& t) {
    std::string s;
    auto add = [&](bool on, const char* name) {
        if (on) s += (s.empty() ? "" : ",") + std::string(name);
    };
    add(t.temporal, "temporal");
    add(t.spatial, "spatial");
    add(t.physical, "physical");
    add(t.symmetric, "symmetric");
    add(t.synchronous, "synchronous");
    return s.empty() ? "-" : s;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bimanual manipulation benchmark kit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate expert demonstrations");
    std::string gen_task;
    std::size_t gen_episodes = 100;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    int gen_resolution = 256;
    bool gen_no_images = false;
    unsigned gen_threads = default_threads();
    gen->add_option("--task", gen_task, "Task id")->required();
    gen->add_option("--episodes", gen_episodes, "Number of successful episodes");
    gen->add_option("--seed", gen_seed, "Base seed");
    gen->add_option("--out", gen_out, "Output root directory")->required();
    gen->add_option("--resolution", gen_resolution, "Camera resolution in pixels");
    gen->add_flag("--no-images", gen_no_images, "Write steps.bin and manifests only");
    gen->add_option("--threads", gen_threads, "Worker threads");

    // keyframes
    auto* kf = app.add_subcommand("keyframes", "Print keyframe indices per episode as NDJSON");
    std::string kf_in;
    KeyframeParams kf_params;
    kf->add_option("--in", kf_in, "Task dataset directory")->required();
    kf->add_option("--window", kf_params.stationary_window, "Stationarity window in steps");
    kf->add_option("--trans-eps", kf_params.trans_eps, "Translation tolerance in meters");
    kf->add_option("--rot-eps", kf_params.rot_eps, "Rotation tolerance in degrees");

    // voxelize
    auto* vox = app.add_subcommand("voxelize", "Fuse one recorded step into the workspace grid");
    std::string vox_in, vox_dump;
    std::size_t vox_episode = 0, vox_step = 0;
    vox->add_option("--in", vox_in, "Task dataset directory")->required();
    vox->add_option("--episode", vox_episode, "Episode index")->required();
    vox->add_option("--step", vox_step, "Step index")->required();
    vox->add_option("--dump", vox_dump, "Write the grid as a BVOX file");

    // targets
    auto* tgt = app.add_subcommand("targets", "Write per-keyframe training targets");
    std::string tgt_in, tgt_out;
    double aug_trans = 0.0, aug_rot = 0.0;
    std::uint64_t tgt_seed = 0;
    tgt->add_option("--in", tgt_in, "Task dataset directory")->required();
    tgt->add_option("--out", tgt_out, "Output directory")->required();
    tgt->add_option("--aug-trans", aug_trans, "Max translation perturbation in meters");
    tgt->add_option("--aug-rot", aug_rot, "Max yaw perturbation in degrees");
    tgt->add_option("--seed", tgt_seed, "Augmentation seed");

    // eval
    auto* ev = app.add_subcommand("eval", "Closed-loop policy evaluation");
    std::string ev_task, ev_policy = "oracle", ev_topology = "joint", ev_report, ev_dataset, ev_command;
    std::size_t ev_episodes = 100;
    std::uint64_t ev_seed = 0;
    unsigned ev_threads = default_threads();
    ev->add_option("--task", ev_task, "Task id")->required();
    ev->add_option("--policy", ev_policy, "oracle, nn or external")
        ->check(CLI::IsMember({"oracle", "nn", "external"}));
    ev->add_option("--topology", ev_topology, "independent, leader-right, leader-left or joint")
        ->check(CLI::IsMember({"independent", "leader-right", "leader-left", "joint"}));
    ev->add_option("--episodes", ev_episodes, "Number of episodes");
    ev->add_option("--seed", ev_seed, "Base seed");
    ev->add_option("--report", ev_report, "Write the JSON report here");
    ev->add_option("--dataset", ev_dataset, "Training dataset for the nn policy");
    ev->add_option("--command", ev_command, "Process to launch for the external policy");
    ev->add_option("--threads", ev_threads, "Worker threads");

    // stats
    auto* st = app.add_subcommand("stats", "Per-task dataset statistics");
    std::string st_in, st_csv, st_json;
    st->add_option("--in", st_in, "Dataset root or task directory")->required();
    st->add_option("--csv", st_csv, "CSV output file");
    st->add_option("--json", st_json, "JSON output file");

    auto* lt = app.add_subcommand("list-tasks", "List tasks, variation counts and taxonomy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen) {
            GenerateOptions opt;
            opt.rig = default_rig(gen_resolution);
            opt.images = !gen_no_images;
            opt.threads = gen_threads;
            const DatasetManifest m = generate_dataset(task_spec(gen_task), gen_episodes, gen_seed, gen_out, opt);
            std::cout << "wrote " << m.episodes.size() << " episodes to " << (fs::path(gen_out) / gen_task).string()
                      << " (" << m.script_failures << " script failures re-seeded)\n";
        } else if (*kf) {
            kf_params.validate();
            const DatasetManifest m = read_manifest(kf_in);
            for (const auto& e : m.episodes) {
                const KeyframeSet ks = extract_keyframes(read_actions(episode_dir(kf_in, e.index)), kf_params);
                std::cout << nlohmann::json{{"episode", e.index}, {"indices", ks.indices}, {"count", ks.indices.size()}}
                                 .dump()
                          << "\n";
            }
        } else if (*vox) {
            const DatasetManifest m = read_manifest(vox_in);
            if (vox_episode >= m.episodes.size()) throw ValidationError("episode index out of range");
            const Demonstration demo = read_episode(episode_dir(vox_in, vox_episode));
            if (vox_step >= demo.steps.size()) throw ValidationError("step index out of range");
            const Observation& obs = demo.steps[vox_step].observation;
            const VoxelGrid grid = fuse(obs, step_cameras(m.rig, obs), m.grid);
            if (!vox_dump.empty()) write_bvox(grid, vox_dump);
            std::cout << nlohmann::json{{"episode", vox_episode}, {"step", vox_step},
                                        {"occupied", grid.occupied_count()}}
                             .dump()
                      << "\n";
        } else if (*tgt) {
            TargetOptions opt;
            if (aug_trans > 0.0 || aug_rot > 0.0) {
                PerturbSpec p;
                p.max_trans = aug_trans;
                p.max_rot_z = aug_rot;
                p.rng_seed = tgt_seed;
                opt.augment = p;
            }
            const std::size_t n = write_dataset_targets(tgt_in, tgt_out, opt);
            std::cout << "wrote targets for " << n << " episodes to " << tgt_out << "\n";
        } else if (*ev) {
            const TaskSpec& task = task_spec(ev_task);
            EvalOptions opt;
            opt.threads = ev_threads;
            std::shared_ptr<const BimanualPart> part;
            if (ev_policy == "oracle") {
                part = oracle_policy(task);
            } else if (ev_policy == "nn") {
                if (ev_dataset.empty()) throw ValidationError("--policy nn needs --dataset");
                const fs::path dir = task_dir_for(ev_dataset, ev_task);
                opt.rig = read_manifest(dir).rig;
                part = nn_policy(load_nn_samples(dir));
            } else {
                if (ev_command.empty()) throw ValidationError("--policy external needs --command");
                part = std::make_shared<ExternalPolicy>(ev_command, fs::temp_directory_path() / "bimanual_queries");
            }
            const Topology topo = Topology::parse(ev_topology);
            const BimanualPolicy policy = topo.kind == Topology::Kind::joint
                                              ? compose({part}, topo)
                                              : compose({arm_of(part), arm_of(part)}, topo);
            const EvalReport rep = evaluate(policy, task, ev_episodes, ev_seed, opt);
            const std::string json = report_to_json(rep);
            if (!ev_report.empty()) write_text(ev_report, json);
            std::cout << rep.task_id << " " << rep.policy << " " << rep.topology << ": " << rep.successes << "/"
                      << rep.episodes << " (" << rep.success_rate << ")\n";
        } else if (*st) {
            const auto rows = dataset_stats(st_in);
            const std::string csv = stats_to_csv(rows);
            if (!st_csv.empty()) write_text(st_csv, csv);
            if (!st_json.empty()) write_text(st_json, stats_to_json(rows));
            std::cout << csv;
        } else if (*lt) {
            std::printf("%-3s %-24s %-12s %-10s %s\n", "row", "id", "variations", "status", "taxonomy");
            for (const auto& row : task_catalog()) {
                const std::string variations =
                    row.implemented ? std::to_string(task_spec(row.name).variations.size()) : "-";
                std::printf("%-3c %-24s %-12s %-10s %s\n", row.letter, row.name.c_str(), variations.c_str(),
                            row.implemented ? "ready" : "spec-only", taxonomy_flags(row.taxonomy).c_str());
            }
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
