#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bimanual/agents.hpp"
#include "bimanual/augment.hpp"
#include "bimanual/camvox.hpp"
#include "bimanual/core.hpp"
#include "bimanual/keyframes.hpp"
#include "bimanual/simworld.hpp"

namespace bimanual {

// ---------------------------------------------------------------------------
// Dataset layout
//
//   <root>/<task>/manifest.json
//   <root>/<task>/episode_<idx>/manifest.json
//   <root>/<task>/episode_<idx>/steps.bin
//   <root>/<task>/episode_<idx>/cam_<name>/rgb_<step>.png
//   <root>/<task>/episode_<idx>/cam_<name>/depth_<step>.bin
//
// steps.bin (little-endian): u32 step count, then per step f64 time and, for
// the right arm then the left arm, 7 x f64 pose (px py pz qw qx qy qz), u8
// open, u8 collide. Proprioception equals the recorded gripper state and the
// timestep fraction is step / (count - 1); both are rebuilt on load.
// ---------------------------------------------------------------------------

inline constexpr const char* kDatasetFormatVersion = "bimanual-dataset/1";

struct EpisodeRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    int variation = 0;
    std::string goal;
    bool success = false;
    double duration_s = 0.0;
    std::size_t keyframe_count = 0;
    std::size_t step_count = 0;

    bool operator==(const EpisodeRecord&) const = default;
};

struct DatasetManifest {
    std::string format_version = kDatasetFormatVersion;
    std::string task_id;
    std::uint64_t seed = 0;
    GridSpec grid;
    CameraRig rig;
    bool images = true;
    std::size_t script_failures = 0;
    std::vector<EpisodeRecord> episodes;
};

struct GenerateOptions {
    CameraRig rig = default_rig();
    bool images = true;        // write camera frames; steps.bin is always written
    unsigned threads = 1;      // episode-parallel rendering and writing
};

/// Runs the scripted expert on split_seed(seed, attempt) for attempt = 0, 1, ...
/// until n episodes succeed and writes them under out_root/<task>/. Throws
/// IoError for unwritable paths and ValidationError after more than 10 * n
/// script failures.
DatasetManifest generate_dataset(const TaskSpec& task, std::size_t n, std::uint64_t seed,
                                 const std::filesystem::path& out_root, const GenerateOptions& options = {});

/// Writes one episode directory. Throws ValidationError when the recorded
/// proprioception differs from the recorded gripper state.
void write_episode(const std::filesystem::path& dir, const Demonstration& demo);
Demonstration read_episode(const std::filesystem::path& dir);
/// steps.bin alone: the per-step actions and timestamps.
std::vector<BimanualAction> read_actions(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& task_dir, const DatasetManifest& m);
/// Throws ValidationError naming the episode for corrupt entries and for an
/// unknown format version.
DatasetManifest read_manifest(const std::filesystem::path& task_dir);

std::filesystem::path episode_dir(const std::filesystem::path& task_dir, std::size_t index);

/// Cameras for one recorded step (static ones plus wrist cameras at the
/// recorded gripper poses).
std::vector<CameraModel> step_cameras(const CameraRig& rig, const Observation& obs);

// ---------------------------------------------------------------------------
// Training targets ("BTGT"): magic, u32 version, 3 x i32 grid dims, u32
// keyframe count, then per keyframe u32 step and, right arm then left arm,
// u32 i, j, k, flat, rot_x, rot_y, rot_z, u8 open, u8 collide.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kTargetsVersion = 1;

struct KeyframeTarget {
    std::uint32_t step = 0;
    DiscreteBimanualAction action;
    bool operator==(const KeyframeTarget&) const = default;
};

struct EpisodeTargets {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<KeyframeTarget> keyframes;
    bool operator==(const EpisodeTargets&) const = default;
};

void write_targets(const std::filesystem::path& path, const EpisodeTargets& t);
EpisodeTargets read_targets(const std::filesystem::path& path);

struct TargetOptions {
    KeyframeParams keyframes;
    std::optional<PerturbSpec> augment;  // rng_seed is split per episode and retry
    int max_augment_attempts = 100;
};

/// Keyframe targets for one recorded action sequence. With augmentation, a
/// perturbation that moves any keyframe action out of the grid is redrawn;
/// after max_augment_attempts the episode falls back to the unperturbed actions.
EpisodeTargets make_episode_targets(const std::vector<BimanualAction>& actions, const GridSpec& grid,
                                    const TargetOptions& options, std::size_t episode);

/// Writes out_dir/episode_<idx>.targets.bin for every episode of a task
/// directory; returns the number of files written.
std::size_t write_dataset_targets(const std::filesystem::path& task_dir, const std::filesystem::path& out_dir,
                                  const TargetOptions& options);

// ---------------------------------------------------------------------------
// Nearest-neighbour training samples
// ---------------------------------------------------------------------------

/// Fused grid at step 0 and at every keyframe but the last, each labelled with
/// the next keyframe's discrete action. Requires a dataset written with images.
std::vector<NnSample> load_nn_samples(const std::filesystem::path& task_dir,
                                      const KeyframeParams& params = {});

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

inline constexpr std::size_t kKeyframeBudget = 25;
inline constexpr double kLegTimeout = 10.0;  // s of simulated time per policy call

struct EpisodeOutcome {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    int variation = 0;
    bool success = false;
    std::size_t steps_taken = 0;
    std::size_t policy_calls = 0;
    std::optional<std::string> failure_tag;  // collision, grasp_miss, protocol, timeout, predicate_fail
    double wall_time_s = 0.0;                // excluded from equality

    bool operator==(const EpisodeOutcome& o) const {
        return index == o.index && seed == o.seed && variation == o.variation && success == o.success &&
               steps_taken == o.steps_taken && policy_calls == o.policy_calls && failure_tag == o.failure_tag;
    }
};

struct EvalReport {
    std::string task_id;
    std::string policy;
    std::string topology;
    std::uint64_t seed = 0;
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    std::map<std::string, std::size_t> failures;
    std::vector<EpisodeOutcome> outcomes;

    bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
    CameraRig rig = default_rig();
    unsigned threads = 1;
};

/// Episode i uses seed split_seed(seed, i) and the variation derived from it.
/// Each policy call is followed by kinematic steps until both grippers sit at
/// the commanded state, the task succeeds, the grippers collide or the leg
/// times out. Reports do not depend on the thread count.
EvalReport evaluate(const BimanualPolicy& policy, const TaskSpec& task, std::size_t episodes, std::uint64_t seed,
                    const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

struct TaskStats {
    std::string task_id;
    std::size_t episodes = 0;
    double duration_s = 0.0;  // mean
    double keyframes = 0.0;   // mean of per-episode counts
    int items = 0;
    int variations = 0;
};

/// One row per task directory found under root (or root itself when it holds
/// a manifest). Throws ValidationError for corrupt manifests.
std::vector<TaskStats> dataset_stats(const std::filesystem::path& root);
std::string stats_to_csv(const std::vector<TaskStats>& rows);
std::string stats_to_json(const std::vector<TaskStats>& rows);

}  // namespace bimanual
