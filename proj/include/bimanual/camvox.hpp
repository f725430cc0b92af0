#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bimanual/core.hpp"

namespace bimanual {

/// Pinhole camera. Camera frame is x right, y down, z forward; extrinsic maps
/// camera coordinates to world coordinates.
struct CameraModel {
    std::string name;
    int width = 0;
    int height = 0;
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    Pose extrinsic;

    void validate() const;
    bool operator==(const CameraModel&) const = default;
};

struct VoxelIndex {
    int i = 0, j = 0, k = 0;
    bool operator==(const VoxelIndex&) const = default;
    auto operator<=>(const VoxelIndex&) const = default;
};

struct GridSpec {
    Vec3 origin = Vec3::Zero();
    double voxel_size = 0.01;
    std::array<int, 3> dims{100, 100, 100};

    void validate() const;
    std::size_t cell_count() const;
    bool contains(const VoxelIndex& idx) const;
    /// x-fastest: i + nx * (j + ny * k).
    std::uint32_t flat(const VoxelIndex& idx) const;
    VoxelIndex unflat(std::uint32_t flat) const;
    Vec3 extent() const;
    Vec3 center() const;

    bool operator==(const GridSpec&) const = default;
};

struct ColoredPoint {
    Vec3 position;
    Rgb color;
};

/// Pixels with depth > 0 lifted into the world frame.
std::vector<ColoredPoint> back_project(const CameraImage& image, const CameraModel& cam);

/// floor binning over half-open cells; nullopt when any index leaves [0, dim).
std::optional<VoxelIndex> world_to_voxel(const Vec3& p, const GridSpec& spec);

/// Cell center. Throws BoundsError for indices outside the grid.
Vec3 voxel_to_world(const VoxelIndex& idx, const GridSpec& spec);

/// Occupancy grid with per-cell point counts and colour sums.
///
/// Cells are kept sparse, sorted by flat index. Colour sums are exact
/// integers, so the mean colour of a cell does not depend on the order in
/// which points arrived.
class VoxelGrid {
public:
    struct Cell {
        std::uint32_t flat = 0;
        std::uint32_t count = 0;
        std::array<std::uint64_t, 3> color_sum{0, 0, 0};
        bool operator==(const Cell&) const = default;
    };

    VoxelGrid() = default;
    explicit VoxelGrid(GridSpec spec);
    /// Takes ownership of cells; sorts and merges duplicate flat indices.
    VoxelGrid(GridSpec spec, std::vector<Cell> cells);

    static VoxelGrid from_points(const GridSpec& spec, std::span<const ColoredPoint> points);

    const GridSpec& spec() const { return spec_; }
    const std::vector<Cell>& cells() const { return cells_; }
    std::size_t occupied_count() const { return cells_.size(); }

    bool occupied(const VoxelIndex& idx) const;
    std::uint32_t count(const VoxelIndex& idx) const;
    /// Mean RGB in [0,255]; nullopt for empty cells.
    std::optional<std::array<double, 3>> color(const VoxelIndex& idx) const;

    /// Dense occupancy bitmap, bit (flat % 64) of word (flat / 64).
    std::vector<std::uint64_t> occupancy_bits() const;

    bool operator==(const VoxelGrid&) const = default;

private:
    const Cell* find(const VoxelIndex& idx) const;

    GridSpec spec_;
    std::vector<Cell> cells_;
};

/// Cell-wise union: counts add and colours combine by count-weighted mean.
VoxelGrid merge(const VoxelGrid& a, const VoxelGrid& b);

/// Back-projects every image through the camera with the same name and bins
/// the points. Out-of-workspace points are dropped.
VoxelGrid fuse(const Observation& observation, std::span<const CameraModel> cams, const GridSpec& spec);

std::size_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// Voxel dump ("BVOX"): 48-byte header (magic, origin xyz f64, voxel_size f64,
// dims xyz i32, all little-endian), then ceil(N/8) occupancy bytes with bit
// (flat % 8) of byte (flat / 8), then one rounded mean RGB triple per
// occupied cell in x-fastest order.
inline constexpr std::size_t kBvoxHeaderBytes = 48;

struct VoxelDump {
    GridSpec spec;
    std::vector<std::uint8_t> occupancy;  // one byte per cell, 0 or 1
    std::vector<Rgb> colors;              // one per occupied cell, x-fastest
};

void write_bvox(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelDump read_bvox(const std::filesystem::path& path);

}  // namespace bimanual
