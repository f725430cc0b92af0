#include "bimanual/harness.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bimanual {

namespace fs = std::filesystem;

namespace {

TaskStats stats_for(const fs::path& task_dir) {
    const DatasetManifest m = read_manifest(task_dir);
    const TaskSpec& task = task_spec(m.task_id);
    TaskStats s;
    s.task_id = m.task_id;
    s.episodes = m.episodes.size();
    s.items = task.item_count;
    s.variations = static_cast<int>(task.variations.size());
    if (s.episodes == 0) return s;
    double duration = 0.0;
    double keyframes = 0.0;
    for (const auto& e : m.episodes) {
        duration += e.duration_s;
        keyframes += static_cast<double>(e.keyframe_count);
    }
    s.duration_s = duration / static_cast<double>(s.episodes);
    s.keyframes = keyframes / static_cast<double>(s.episodes);
    return s;
}

}  // namespace

std::vector<TaskStats> dataset_stats(const fs::path& root) {
    if (fs::exists(root / "manifest.json")) return {stats_for(root)};
    if (!fs::is_directory(root)) throw IoError(root.string() + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
    }
    if (dirs.empty()) throw ValidationError(root.string() + " contains no dataset manifest");
    std::sort(dirs.begin(), dirs.end());
    std::vector<TaskStats> rows;
    for (const auto& d : dirs) rows.push_back(stats_for(d));
    return rows;
}

std::string stats_to_csv(const std::vector<TaskStats>& rows) {
    std::ostringstream os;
    os << "task,episodes,duration_s,keyframes,items,variations\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.task_id << ',' << r.episodes << ',' << r.duration_s << ',' << r.keyframes << ',' << r.items << ','
           << r.variations << '\n';
    }
    return os.str();
}

std::string stats_to_json(const std::vector<TaskStats>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"task", r.task_id},
                       {"episodes", r.episodes},
                       {"duration_s", r.duration_s},
                       {"keyframes", r.keyframes},
                       {"items", r.items},
                       {"variations", r.variations}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace bimanual
