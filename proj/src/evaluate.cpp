#include "bimanual/harness.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "bimanual/codec.hpp"
#include "parallel.hpp"

namespace bimanual {

namespace {

bool at_command(const WorldState& w, const BimanualAction& cmd) {
    for (Arm arm : kArms) {
        const GripperState& g = w.grippers[arm];
        if (g.pose != cmd[arm].pose || g.open != cmd[arm].open) return false;
    }
    return true;
}

EpisodeOutcome run_episode(const BimanualPolicy& policy, const TaskSpec& task, std::size_t index,
                           std::uint64_t base_seed, const EvalOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    const GridSpec grid = workspace_grid();
    const int max_leg_steps = static_cast<int>(std::lround(kLegTimeout / kStepDt));

    EpisodeOutcome out;
    out.index = index;
    out.seed = split_seed(base_seed, index);
    out.variation = variation_for_seed(task, out.seed);
    ResetResult r = reset(task, out.variation, out.seed);
    WorldState w = std::move(r.world);

    bool protocol_error = false;
    bool timed_out = false;
    bool done = success(w, task);
    while (!done && !w.collided && out.policy_calls < kKeyframeBudget) {
        AgentInput in;
        if (policy.uses_observation()) {
            const auto cams = rig_cameras(options.rig, w);
            in.grid = fuse(render(w, cams), cams, grid);
        } else {
            in.grid = VoxelGrid(grid);
        }
        for (Arm arm : kArms) in.proprio[arm] = ArmProprio{w.grippers[arm].open, w.grippers[arm].pose};
        in.goal = r.goal;
        in.keyframe_index = out.policy_calls;
        in.episode = EpisodeContext{task.id, out.variation, out.seed};

        BimanualAction cmd;
        try {
            const DiscreteBimanualAction d = policy.act(in);
            for (Arm arm : kArms) validate_discrete(d[arm], grid);
            cmd = decode(d, grid);
        } catch (const PolicyError&) {
            protocol_error = true;
        } catch (const ProtocolError&) {
            protocol_error = true;
        } catch (const CodecError&) {
            protocol_error = true;
        }
        if (protocol_error) break;
        ++out.policy_calls;

        for (int leg = 0;; ++leg) {
            if (at_command(w, cmd) || w.collided) break;
            if (leg >= max_leg_steps) {
                timed_out = true;
                break;
            }
            w = step(w, cmd, kStepDt);
            ++out.steps_taken;
            if (success(w, task)) {
                done = true;
                break;
            }
        }
    }

    out.success = done && !w.collided;
    if (!out.success) {
        if (w.collided) {
            out.failure_tag = "collision";
        } else if (task.prehensile && w.grasp_missed) {
            out.failure_tag = "grasp_miss";
        } else if (protocol_error) {
            out.failure_tag = "protocol";
        } else if (timed_out) {
            out.failure_tag = "timeout";
        } else {
            out.failure_tag = "predicate_fail";
        }
    }
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

}  // namespace

EvalReport evaluate(const BimanualPolicy& policy, const TaskSpec& task, std::size_t episodes, std::uint64_t seed,
                    const EvalOptions& options) {
    EvalReport rep;
    rep.task_id = task.name;
    rep.policy = policy.name();
    rep.topology = policy.topology().name();
    rep.seed = seed;
    rep.episodes = episodes;
    rep.outcomes.resize(episodes);
    detail::parallel_for(episodes, options.threads, [&](std::size_t i) {
        rep.outcomes[i] = run_episode(policy, task, i, seed, options);
    });
    for (const auto& o : rep.outcomes) {
        if (o.success) {
            ++rep.successes;
        } else {
            ++rep.failures[*o.failure_tag];
        }
    }
    rep.success_rate = episodes == 0 ? 0.0 : static_cast<double>(rep.successes) / static_cast<double>(episodes);
    return rep;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& o : report.outcomes) {
        eps.push_back({{"index", o.index},
                       {"seed", o.seed},
                       {"variation", o.variation},
                       {"success", o.success},
                       {"steps_taken", o.steps_taken},
                       {"policy_calls", o.policy_calls},
                       {"failure_tag", o.failure_tag ? nlohmann::json(*o.failure_tag) : nlohmann::json(nullptr)},
                       {"wall_time_s", o.wall_time_s}});
    }
    const nlohmann::json j = {{"task_id", report.task_id},
                              {"policy", report.policy},
                              {"topology", report.topology},
                              {"seed", report.seed},
                              {"episodes", report.episodes},
                              {"successes", report.successes},
                              {"success_rate", report.success_rate},
                              {"failures", report.failures},
                              {"outcomes", eps}};
    return j.dump(2) + "\n";
}

}  // namespace bimanual
