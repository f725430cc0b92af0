#include "bimanual/agents.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "bimanual/keyframes.hpp"

namespace bimanual {

std::string Topology::name() const {
    switch (kind) {
        case Kind::independent: return "independent";
        case Kind::leader_follower: return leader == Arm::right ? "leader-right" : "leader-left";
        case Kind::joint: return "joint";
    }
    return "joint";
}

Topology Topology::parse(std::string_view name) {
    if (name == "independent") return independent();
    if (name == "leader-right") return leader_follower(Arm::right);
    if (name == "leader-left") return leader_follower(Arm::left);
    if (name == "joint") return joint();
    throw ConfigError("unknown topology '" + std::string(name) + "'");
}

namespace {

template <typename T>
const std::shared_ptr<const T>* part_as(const PolicyPart& p) {
    return std::get_if<std::shared_ptr<const T>>(&p);
}

bool part_uses_observation(const PolicyPart& p) {
    return std::visit([](const auto& ptr) { return ptr->uses_observation(); }, p);
}

std::string part_name(const PolicyPart& p) {
    return std::visit([](const auto& ptr) { return ptr->name(); }, p);
}

// What a single-arm part is allowed to see.
AgentInput arm_view(const AgentInput& in, Arm arm) {
    AgentInput view = in;
    view.leader_action.reset();
    view.proprio[arm == Arm::right ? Arm::left : Arm::right].reset();
    return view;
}

Arm other(Arm arm) { return arm == Arm::right ? Arm::left : Arm::right; }

}  // namespace

BimanualPolicy::BimanualPolicy(std::vector<PolicyPart> parts, Topology topology)
    : parts_(std::move(parts)), topology_(topology) {
    const auto arity_error = [&](const std::string& need) {
        return CompositionError("topology " + topology_.name() + " needs " + need + ", got " +
                                std::to_string(parts_.size()) + " part(s)");
    };
    if (topology_.kind == Topology::Kind::joint) {
        if (parts_.size() != 1 || !part_as<BimanualPart>(parts_[0]) || !*part_as<BimanualPart>(parts_[0])) {
            throw arity_error("exactly one bimanual part");
        }
        return;
    }
    if (parts_.size() != 2) throw arity_error("two single-arm parts");
    for (const auto& p : parts_) {
        const auto* arm = part_as<ArmPolicy>(p);
        if (!arm || !*arm) throw arity_error("two single-arm parts");
    }
}

DiscreteBimanualAction BimanualPolicy::act(const AgentInput& input) const {
    if (topology_.kind == Topology::Kind::joint) {
        AgentInput view = input;
        view.leader_action.reset();
        return (*part_as<BimanualPart>(parts_[0]))->act(view);
    }
    const PerArm<const ArmPolicy*> part{part_as<ArmPolicy>(parts_[0])->get(), part_as<ArmPolicy>(parts_[1])->get()};
    DiscreteBimanualAction out;
    if (topology_.kind == Topology::Kind::independent) {
        for (Arm arm : kArms) out[arm] = part[arm]->act(arm_view(input, arm), arm);
        return out;
    }
    const Arm leader = topology_.leader;
    const Arm follower = other(leader);
    out[leader] = part[leader]->act(arm_view(input, leader), leader);
    AgentInput view = arm_view(input, follower);
    view.leader_action = out[leader];
    out[follower] = part[follower]->act(view, follower);
    return out;
}

bool BimanualPolicy::uses_observation() const {
    return std::any_of(parts_.begin(), parts_.end(), part_uses_observation);
}

std::string BimanualPolicy::name() const {
    std::string n;
    for (const auto& p : parts_) n += (n.empty() ? "" : "+") + part_name(p);
    return n;
}

BimanualPolicy compose(std::vector<PolicyPart> parts, Topology topology) {
    return BimanualPolicy(std::move(parts), topology);
}

namespace {

class ArmOfBimanual final : public ArmPolicy {
public:
    explicit ArmOfBimanual(std::shared_ptr<const BimanualPart> part) : part_(std::move(part)) {}
    DiscreteArmAction act(const AgentInput& input, Arm arm) const override { return part_->act(input)[arm]; }
    bool uses_observation() const override { return part_->uses_observation(); }
    std::string name() const override { return part_->name(); }

private:
    std::shared_ptr<const BimanualPart> part_;
};

class ConstantArm final : public ArmPolicy {
public:
    explicit ConstantArm(DiscreteArmAction a) : action_(a) {}
    DiscreteArmAction act(const AgentInput&, Arm) const override { return action_; }
    bool uses_observation() const override { return false; }
    std::string name() const override { return "constant"; }

private:
    DiscreteArmAction action_;
};

class MirrorFollower final : public ArmPolicy {
public:
    explicit MirrorFollower(GridSpec spec) : spec_(spec) {}
    DiscreteArmAction act(const AgentInput& input, Arm) const override {
        if (!input.leader_action) throw PolicyError("mirror follower called without a leader action");
        DiscreteArmAction a = *input.leader_action;
        a.trans.j = spec_.dims[1] - 1 - a.trans.j;
        return a;
    }
    bool uses_observation() const override { return false; }
    std::string name() const override { return "mirror"; }

private:
    GridSpec spec_;
};

class Oracle final : public BimanualPart {
public:
    explicit Oracle(const TaskSpec& task) : task_(task) {}

    DiscreteBimanualAction act(const AgentInput& input) const override {
        if (!input.episode) throw PolicyError("oracle needs the episode context");
        if (input.episode->task != task_.id) throw PolicyError("oracle built for " + task_.name + " got another task");
        const std::vector<DiscreteBimanualAction> plan = this->plan(*input.episode);
        return plan[std::min(input.keyframe_index, plan.size() - 1)];
    }
    bool uses_observation() const override { return false; }
    std::string name() const override { return "oracle"; }

private:
    std::vector<DiscreteBimanualAction> plan(const EpisodeContext& ep) const {
        const ResetResult r = reset(task_, ep.variation, ep.seed);
        const ExpertResult demo = expert(task_, r.world);
        const KeyframeSet ks = extract_keyframes(demo.demo);
        const GridSpec grid = workspace_grid();
        std::vector<DiscreteBimanualAction> out;
        for (const auto& a : keyframe_actions(demo.demo, ks)) out.push_back(encode(a, grid));
        return out;
    }

    const TaskSpec& task_;
};

class NearestNeighbour final : public BimanualPart {
public:
    explicit NearestNeighbour(std::vector<NnSample> samples) : samples_(std::move(samples)) {
        if (samples_.empty()) throw PolicyError("nearest-neighbour policy needs a non-empty dataset");
    }

    DiscreteBimanualAction act(const AgentInput& input) const override {
        const std::vector<std::uint64_t> query = input.grid.occupancy_bits();
        const NnSample* best = nullptr;
        std::tuple<std::size_t, std::size_t, std::size_t> best_key{};
        for (const NnSample& s : samples_) {
            if (s.goal != input.goal) continue;
            const std::tuple key{hamming_distance(query, s.occupancy), s.episode, s.keyframe};
            if (!best || key < best_key) {
                best = &s;
                best_key = key;
            }
        }
        if (!best) throw PolicyError("no training sample with goal '" + input.goal + "'");
        return best->action;
    }
    std::string name() const override { return "nn"; }

private:
    std::vector<NnSample> samples_;
};

}  // namespace

std::shared_ptr<const ArmPolicy> arm_of(std::shared_ptr<const BimanualPart> part) {
    if (!part) throw CompositionError("arm_of needs a bimanual part");
    return std::make_shared<ArmOfBimanual>(std::move(part));
}

std::shared_ptr<const ArmPolicy> constant_arm_policy(DiscreteArmAction action) {
    return std::make_shared<ConstantArm>(action);
}

std::shared_ptr<const ArmPolicy> mirror_follower(GridSpec spec) {
    spec.validate();
    return std::make_shared<MirrorFollower>(spec);
}

std::shared_ptr<const BimanualPart> oracle_policy(const TaskSpec& task) { return std::make_shared<Oracle>(task); }

std::shared_ptr<const BimanualPart> nn_policy(std::vector<NnSample> samples) {
    return std::make_shared<NearestNeighbour>(std::move(samples));
}

}  // namespace bimanual
