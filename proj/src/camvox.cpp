#include "bimanual/camvox.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

#include "bimanual/binio.hpp"

namespace bimanual {

void CameraModel::validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("camera " + name + ": non-positive resolution");
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera " + name + ": focal lengths must be positive");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
        throw ConfigError("camera " + name + ": principal point outside the image");
    }
}

void GridSpec::validate() const {
    if (!(voxel_size > 0.0)) throw ConfigError("voxel_size must be positive");
    for (int d : dims) {
        if (d < 1) throw ConfigError("grid dims must be >= 1");
    }
    if (cell_count() > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("grid too large");
}

std::size_t GridSpec::cell_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
}

bool GridSpec::contains(const VoxelIndex& idx) const {
    return idx.i >= 0 && idx.i < dims[0] && idx.j >= 0 && idx.j < dims[1] && idx.k >= 0 && idx.k < dims[2];
}

std::uint32_t GridSpec::flat(const VoxelIndex& idx) const {
    return static_cast<std::uint32_t>(idx.i + dims[0] * (idx.j + dims[1] * idx.k));
}

VoxelIndex GridSpec::unflat(std::uint32_t f) const {
    const auto nx = static_cast<std::uint32_t>(dims[0]);
    const auto ny = static_cast<std::uint32_t>(dims[1]);
    return {static_cast<int>(f % nx), static_cast<int>((f / nx) % ny), static_cast<int>(f / (nx * ny))};
}

Vec3 GridSpec::extent() const { return Vec3(dims[0], dims[1], dims[2]) * voxel_size; }

Vec3 GridSpec::center() const { return origin + 0.5 * extent(); }

std::vector<ColoredPoint> back_project(const CameraImage& image, const CameraModel& cam) {
    if (image.width != cam.width || image.height != cam.height) {
        throw InputShapeError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                              " does not match camera " + cam.name);
    }
    const auto n = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
    if (image.depth.size() != n || image.rgb.size() != 3 * n) {
        throw InputShapeError("buffer sizes do not match " + cam.name + " resolution");
    }
    const Mat3 rot = cam.extrinsic.rotation();
    const Vec3& t = cam.extrinsic.position();
    std::vector<ColoredPoint> out;
    out.reserve(n / 2);
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            const std::size_t px = static_cast<std::size_t>(v) * image.width + u;
            const double d = image.depth[px];
            if (!(d > 0.0)) continue;
            const Vec3 pc((u - cam.cx) * d / cam.fx, (v - cam.cy) * d / cam.fy, d);
            out.push_back({rot * pc + t, Rgb{image.rgb[3 * px], image.rgb[3 * px + 1], image.rgb[3 * px + 2]}});
        }
    }
    return out;
}

std::optional<VoxelIndex> world_to_voxel(const Vec3& p, const GridSpec& spec) {
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
        const double f = std::floor((p[a] - spec.origin[a]) / spec.voxel_size);
        if (!(f >= 0.0) || f >= spec.dims[a]) return std::nullopt;
        idx[a] = static_cast<int>(f);
    }
    return VoxelIndex{idx[0], idx[1], idx[2]};
}

Vec3 voxel_to_world(const VoxelIndex& idx, const GridSpec& spec) {
    if (!spec.contains(idx)) {
        throw BoundsError("voxel (" + std::to_string(idx.i) + "," + std::to_string(idx.j) + "," +
                          std::to_string(idx.k) + ") outside grid");
    }
    return spec.origin + (Vec3(idx.i, idx.j, idx.k) + Vec3::Constant(0.5)) * spec.voxel_size;
}

VoxelGrid::VoxelGrid(GridSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

VoxelGrid::VoxelGrid(GridSpec spec, std::vector<Cell> cells) : spec_(std::move(spec)) {
    spec_.validate();
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.flat < b.flat; });
    for (const Cell& c : cells) {
        if (c.count == 0) continue;
        if (!cells_.empty() && cells_.back().flat == c.flat) {
            Cell& last = cells_.back();
            last.count += c.count;
            for (int ch = 0; ch < 3; ++ch) last.color_sum[ch] += c.color_sum[ch];
        } else {
            cells_.push_back(c);
        }
    }
}

VoxelGrid VoxelGrid::from_points(const GridSpec& spec, std::span<const ColoredPoint> points) {
    // Pack (flat index, rgb) into one key so a single sort groups each cell.
    std::vector<std::uint64_t> keys;
    keys.reserve(points.size());
    for (const auto& p : points) {
        const auto idx = world_to_voxel(p.position, spec);
        if (!idx) continue;
        const std::uint64_t rgb = (std::uint64_t{p.color.r} << 16) | (std::uint64_t{p.color.g} << 8) | p.color.b;
        keys.push_back((std::uint64_t{spec.flat(*idx)} << 24) | rgb);
    }
    std::sort(keys.begin(), keys.end());
    std::vector<Cell> cells;
    for (std::uint64_t key : keys) {
        const auto flat = static_cast<std::uint32_t>(key >> 24);
        if (cells.empty() || cells.back().flat != flat) cells.push_back(Cell{flat, 0, {0, 0, 0}});
        Cell& c = cells.back();
        ++c.count;
        c.color_sum[0] += (key >> 16) & 0xFF;
        c.color_sum[1] += (key >> 8) & 0xFF;
        c.color_sum[2] += key & 0xFF;
    }
    VoxelGrid grid(spec);
    grid.cells_ = std::move(cells);
    return grid;
}

const VoxelGrid::Cell* VoxelGrid::find(const VoxelIndex& idx) const {
    if (!spec_.contains(idx)) return nullptr;
    const std::uint32_t f = spec_.flat(idx);
    auto it = std::lower_bound(cells_.begin(), cells_.end(), f, [](const Cell& c, std::uint32_t v) { return c.flat < v; });
    return (it != cells_.end() && it->flat == f) ? &*it : nullptr;
}

bool VoxelGrid::occupied(const VoxelIndex& idx) const { return find(idx) != nullptr; }

std::uint32_t VoxelGrid::count(const VoxelIndex& idx) const {
    const Cell* c = find(idx);
    return c ? c->count : 0;
}

std::optional<std::array<double, 3>> VoxelGrid::color(const VoxelIndex& idx) const {
    const Cell* c = find(idx);
    if (!c) return std::nullopt;
    const double n = c->count;
    return std::array<double, 3>{c->color_sum[0] / n, c->color_sum[1] / n, c->color_sum[2] / n};
}

std::vector<std::uint64_t> VoxelGrid::occupancy_bits() const {
    std::vector<std::uint64_t> bits((spec_.cell_count() + 63) / 64, 0);
    for (const Cell& c : cells_) bits[c.flat / 64] |= std::uint64_t{1} << (c.flat % 64);
    return bits;
}

VoxelGrid merge(const VoxelGrid& a, const VoxelGrid& b) {
    if (!(a.spec() == b.spec())) throw ConfigError("cannot merge grids with different specs");
    std::vector<VoxelGrid::Cell> cells = a.cells();
    cells.insert(cells.end(), b.cells().begin(), b.cells().end());
    return VoxelGrid(a.spec(), std::move(cells));
}

VoxelGrid fuse(const Observation& observation, std::span<const CameraModel> cams, const GridSpec& spec) {
    spec.validate();
    std::vector<ColoredPoint> points;
    for (const auto& [name, image] : observation.images) {
        auto cam = std::find_if(cams.begin(), cams.end(), [&](const CameraModel& c) { return c.name == name; });
        if (cam == cams.end()) throw ConfigError("no camera model for image '" + name + "'");
        auto pts = back_project(image, *cam);
        points.insert(points.end(), pts.begin(), pts.end());
    }
    return VoxelGrid::from_points(spec, points);
}

std::size_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) throw InputShapeError("occupancy bitmaps differ in size");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
    return d;
}

namespace {
constexpr char kBvoxMagic[5] = "BVOX";

std::uint8_t round_channel(std::uint64_t sum, std::uint32_t count) {
    // Round half up on the exact rational mean.
    return static_cast<std::uint8_t>((2 * sum + count) / (2 * std::uint64_t{count}));
}
}  // namespace

void write_bvox(const VoxelGrid& grid, const std::filesystem::path& path) {
    const GridSpec& s = grid.spec();
    binio::Writer w;
    w.magic(kBvoxMagic);
    for (int a = 0; a < 3; ++a) w.f64(s.origin[a]);
    w.f64(s.voxel_size);
    for (int a = 0; a < 3; ++a) w.i32(s.dims[a]);
    std::vector<std::uint8_t> bits((s.cell_count() + 7) / 8, 0);
    for (const auto& c : grid.cells()) bits[c.flat / 8] |= static_cast<std::uint8_t>(1u << (c.flat % 8));
    w.bytes(bits);
    for (const auto& c : grid.cells()) {
        w.u8(round_channel(c.color_sum[0], c.count));
        w.u8(round_channel(c.color_sum[1], c.count));
        w.u8(round_channel(c.color_sum[2], c.count));
    }
    binio::write_file(path, w.data());
}

VoxelDump read_bvox(const std::filesystem::path& path) {
    const auto data = binio::read_file(path);
    binio::Reader r(data, path.string());
    if (!r.magic(kBvoxMagic)) throw ValidationError(path.string() + ": not a BVOX file");
    VoxelDump dump;
    for (int a = 0; a < 3; ++a) dump.spec.origin[a] = r.f64();
    dump.spec.voxel_size = r.f64();
    for (int a = 0; a < 3; ++a) dump.spec.dims[a] = r.i32();
    dump.spec.validate();
    const std::size_t n = dump.spec.cell_count();
    const auto bits = r.take((n + 7) / 8);
    dump.occupancy.resize(n);
    std::size_t occupied = 0;
    for (std::size_t f = 0; f < n; ++f) {
        dump.occupancy[f] = (bits[f / 8] >> (f % 8)) & 1u;
        occupied += dump.occupancy[f];
    }
    for (std::size_t i = 0; i < occupied; ++i) {
        const auto rgb = r.take(3);
        dump.colors.push_back({rgb[0], rgb[1], rgb[2]});
    }
    if (r.remaining() != 0) throw ValidationError(path.string() + ": trailing bytes");
    return dump;
}

}  // namespace bimanual
