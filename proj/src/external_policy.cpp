#include "bimanual/agents.hpp"

#include <csignal>
#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

namespace bimanual {

using nlohmann::json;

namespace {

json arm_json(const DiscreteArmAction& a) {
    return {{"trans", {a.trans.i, a.trans.j, a.trans.k}},
            {"rot", {a.rot_bins[0], a.rot_bins[1], a.rot_bins[2]}},
            {"open", a.open},
            {"collide", a.collide}};
}

json pose_json(const Pose& p) {
    const Vec3& t = p.position();
    const Quat& q = p.orientation();
    return json::array({t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()});
}

int int_field(const json& arr, std::size_t i, const std::string& where) {
    if (!arr.is_array() || arr.size() != 3 || !arr[i].is_number_integer()) {
        throw ProtocolError(where + " must be an array of three integers");
    }
    return arr[i].get<int>();
}

DiscreteArmAction arm_from_json(const json& j, const std::string& arm) {
    if (!j.is_object()) throw ProtocolError("'" + arm + "' must be an object");
    for (const char* key : {"trans", "rot", "open", "collide"}) {
        if (!j.contains(key)) throw ProtocolError("'" + arm + "' lacks field '" + key + "'");
    }
    DiscreteArmAction a;
    const json& t = j.at("trans");
    const json& r = j.at("rot");
    a.trans = {int_field(t, 0, arm + ".trans"), int_field(t, 1, arm + ".trans"), int_field(t, 2, arm + ".trans")};
    for (std::size_t i = 0; i < 3; ++i) a.rot_bins[i] = int_field(r, i, arm + ".rot");
    if (!j.at("open").is_boolean() || !j.at("collide").is_boolean()) {
        throw ProtocolError(arm + ".open and " + arm + ".collide must be booleans");
    }
    a.open = j.at("open").get<bool>();
    a.collide = j.at("collide").get<bool>();
    return a;
}

void write_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError(std::string("write to policy process failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

}  // namespace

std::string discrete_arm_to_json(const DiscreteArmAction& a) { return arm_json(a).dump(); }

DiscreteBimanualAction discrete_bimanual_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("reply is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("right") || !j.contains("left")) {
        throw ProtocolError("reply must be an object with 'right' and 'left'");
    }
    return {arm_from_json(j.at("right"), "right"), arm_from_json(j.at("left"), "left")};
}

ExternalPolicy::ExternalPolicy(std::string command, std::filesystem::path scratch_dir)
    : command_(std::move(command)), scratch_(std::move(scratch_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(scratch_, ec);
    if (ec) throw IoError("cannot create " + scratch_.string() + ": " + ec.message());
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
        throw IoError(std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw IoError(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    // A child that exits early must surface as a protocol error, not SIGPIPE.
    std::signal(SIGPIPE, SIG_IGN);
}

ExternalPolicy::~ExternalPolicy() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
}

std::string ExternalPolicy::exchange(const std::string& line) const {
    write_all(to_child_, line + "\n");
    for (;;) {
        const auto nl = pending_.find('\n');
        if (nl != std::string::npos) {
            std::string reply = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            return reply;
        }
        char buf[4096];
        const ssize_t n = ::read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw ProtocolError("policy process closed its output");
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

DiscreteBimanualAction ExternalPolicy::act(const AgentInput& input) const {
    std::lock_guard lock(mutex_);
    const auto grid_path = scratch_ / ("query_" + std::to_string(counter_++) + ".bvox");
    write_bvox(input.grid, grid_path);
    json req;
    req["grid_ref"] = grid_path.string();
    json proprio = json::object();
    for (Arm arm : kArms) {
        if (const auto& p = input.proprio[arm]) {
            proprio[arm_name(arm)] = {{"gripper_open", p->gripper_open}, {"ee_pose", pose_json(p->ee_pose)}};
        }
    }
    req["proprio"] = proprio;
    req["goal"] = input.goal;
    if (input.leader_action) req["leader_action"] = arm_json(*input.leader_action);
    const std::string reply = exchange(req.dump());
    std::filesystem::remove(grid_path);
    return discrete_bimanual_from_json(reply);
}

}  // namespace bimanual
