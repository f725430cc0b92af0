#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bimanual::png {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

/// 8-bit RGB. Both throw IoError.
void write_rgb(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb);
Image read_rgb(const std::filesystem::path& path);

}  // namespace bimanual::png
