#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bimanual/camvox.hpp"
#include "bimanual/codec.hpp"
#include "bimanual/core.hpp"
#include "bimanual/simworld.hpp"

namespace bimanual {

/// Privileged episode identity. Only the oracle reads it.
struct EpisodeContext {
    TaskId task = TaskId::push_box;
    int variation = 0;
    std::uint64_t seed = 0;
    bool operator==(const EpisodeContext&) const = default;
};

struct AgentInput {
    VoxelGrid grid;
    PerArm<std::optional<ArmProprio>> proprio;
    std::string goal;
    std::optional<DiscreteArmAction> leader_action;  // follower only
    std::size_t keyframe_index = 0;                  // policy calls so far in this episode
    std::optional<EpisodeContext> episode;

    bool operator==(const AgentInput&) const = default;
};

/// Predicts the action of one arm.
class ArmPolicy {
public:
    virtual ~ArmPolicy() = default;
    virtual DiscreteArmAction act(const AgentInput& input, Arm arm) const = 0;
    /// False when the policy never looks at the voxel grid, so callers can
    /// skip rendering and fusion.
    virtual bool uses_observation() const { return true; }
    virtual std::string name() const = 0;
};

/// Predicts both arms in one call.
class BimanualPart {
public:
    virtual ~BimanualPart() = default;
    virtual DiscreteBimanualAction act(const AgentInput& input) const = 0;
    virtual bool uses_observation() const { return true; }
    virtual std::string name() const = 0;
};

struct Topology {
    enum class Kind { independent, leader_follower, joint };
    Kind kind = Kind::joint;
    Arm leader = Arm::right;  // leader_follower only

    static Topology independent() { return {Kind::independent, Arm::right}; }
    static Topology leader_follower(Arm leader) { return {Kind::leader_follower, leader}; }
    static Topology joint() { return {Kind::joint, Arm::right}; }

    /// "independent", "leader-right", "leader-left" or "joint".
    std::string name() const;
    /// Throws ConfigError for unknown names.
    static Topology parse(std::string_view name);

    bool operator==(const Topology&) const = default;
};

/// parts[0] acts for the right arm and parts[1] for the left arm.
using PolicyPart = std::variant<std::shared_ptr<const ArmPolicy>, std::shared_ptr<const BimanualPart>>;

/// A composed policy mapping one AgentInput to both arms' actions.
///
/// Independent: each arm part sees the input without leader_action and without
/// the other arm's proprioception. LeaderFollower: the leader acts first; the
/// follower's input additionally carries the leader's discrete action. Joint:
/// a single bimanual part sees everything.
class BimanualPolicy {
public:
    BimanualPolicy(std::vector<PolicyPart> parts, Topology topology);

    DiscreteBimanualAction act(const AgentInput& input) const;
    bool uses_observation() const;
    const Topology& topology() const { return topology_; }
    std::string name() const;

private:
    std::vector<PolicyPart> parts_;
    Topology topology_;
};

/// Throws CompositionError when the parts do not fit the topology.
BimanualPolicy compose(std::vector<PolicyPart> parts, Topology topology);

/// One arm's output of a bimanual part, usable under the two-part topologies.
std::shared_ptr<const ArmPolicy> arm_of(std::shared_ptr<const BimanualPart> part);

/// Always returns the same action.
std::shared_ptr<const ArmPolicy> constant_arm_policy(DiscreteArmAction action);

/// Follower that reflects the leader's voxel across the workspace y midplane
/// (j -> ny - 1 - j) and copies its other fields. Throws PolicyError without a
/// leader action.
std::shared_ptr<const ArmPolicy> mirror_follower(GridSpec spec);

/// Replays the scripted expert's keyframe actions for the episode named in
/// AgentInput::episode (call k returns keyframe min(k, n - 1)). Throws
/// PolicyError when the input carries no episode context.
std::shared_ptr<const BimanualPart> oracle_policy(const TaskSpec& task);

/// One retrieval entry: a fused grid, the goal string and the discrete action
/// at the next keyframe.
struct NnSample {
    std::string goal;
    std::vector<std::uint64_t> occupancy;  // VoxelGrid::occupancy_bits()
    DiscreteBimanualAction action;
    std::size_t episode = 0;
    std::size_t keyframe = 0;  // slot of the query step: 0 = start, k = after keyframe k
};

/// Nearest neighbour on occupancy Hamming distance among samples with an equal
/// goal string; ties go to the lowest episode, then the lowest keyframe.
/// Throws PolicyError for an empty dataset or when no sample has the goal.
std::shared_ptr<const BimanualPart> nn_policy(std::vector<NnSample> samples);

/// Talks to an external process over newline-delimited JSON on its
/// stdin/stdout. Each request writes the query grid as a BVOX file under
/// scratch_dir and sends
///   {"grid_ref": path, "proprio": {...}, "goal": str, "leader_action": {...}?}
/// The reply must be {"right": {...}, "left": {...}} where each arm is
///   {"trans": [i, j, k], "rot": [bx, by, bz], "open": bool, "collide": bool}.
/// Malformed replies throw ProtocolError. Calls are serialised.
class ExternalPolicy : public BimanualPart {
public:
    ExternalPolicy(std::string command, std::filesystem::path scratch_dir);
    ~ExternalPolicy() override;
    ExternalPolicy(const ExternalPolicy&) = delete;
    ExternalPolicy& operator=(const ExternalPolicy&) = delete;

    DiscreteBimanualAction act(const AgentInput& input) const override;
    std::string name() const override { return "external"; }

private:
    std::string exchange(const std::string& line) const;

    std::string command_;
    std::filesystem::path scratch_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    mutable std::mutex mutex_;
    mutable std::string pending_;
    mutable std::uint64_t counter_ = 0;
};

/// JSON helpers shared by the subprocess protocol and the CLI.
std::string discrete_arm_to_json(const DiscreteArmAction& a);
/// Throws ProtocolError naming the offending field.
DiscreteBimanualAction discrete_bimanual_from_json(const std::string& text);

}  // namespace bimanual
