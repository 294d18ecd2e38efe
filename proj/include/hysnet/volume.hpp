#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace hysnet {

// A 3D scalar field. Voxels are stored x-fastest (x + X*(y + Y*z)).
struct Volume {
    std::array<std::size_t, 3> dims{0, 0, 0};  // X, Y, Z
    std::vector<float> voxels;
    std::string meta;  // optional source id

    std::size_t count() const { return dims[0] * dims[1] * dims[2]; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + dims[0] * (y + dims[1] * z);
    }

    float& at(std::size_t x, std::size_t y, std::size_t z) { return voxels[index(x, y, z)]; }
    float at(std::size_t x, std::size_t y, std::size_t z) const { return voxels[index(x, y, z)]; }
};

// HVOL container, little-endian:
//   magic "HVOL" | version u32 = 1 | dims 3 x u32 (X, Y, Z) | X*Y*Z f32 values
Volume read_volume(const std::filesystem::path& path);
void write_volume(const std::filesystem::path& path, const Volume& v);

// Divide by the global maximum; output max is exactly 1.
Volume normalize(const Volume& v);

}  // namespace hysnet
