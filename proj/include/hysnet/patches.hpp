#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "hysnet/rng.hpp"
#include "hysnet/tensor.hpp"
#include "hysnet/volume.hpp"

namespace hysnet {

// Fixed-stride patch offsets along each axis: 0, S, 2S, ... plus a tail
// offset L-P when the stride does not land on it, so every voxel is covered.
struct PatchGrid {
    std::size_t patch = 0;
    std::size_t stride = 0;
    std::array<std::vector<std::size_t>, 3> offsets;

    std::size_t count() const {
        return offsets[0].size() * offsets[1].size() * offsets[2].size();
    }
};

PatchGrid make_patch_grid(const std::array<std::size_t, 3>& dims, std::size_t patch,
                          std::size_t stride);

// Grid positions in z-major order (z slowest, x fastest).
std::vector<std::array<std::size_t, 3>> grid_positions(const PatchGrid& grid);

// The patch whose grid index is central along every axis.
std::array<std::size_t, 3> grid_center_position(const PatchGrid& grid);

// n independent uniform start positions in [0, L-P] per axis.
std::vector<std::array<std::size_t, 3>> sample_random_patch_positions(
    const std::array<std::size_t, 3>& dims, std::size_t patch, std::size_t n, Rng& rng);

// Copies cubic patches into a [N, 1, P, P, P] tensor (depth = z, height = y,
// width = x so the fastest axis stays fastest).
template <typename T>
Tensor<T> patches_to_tensor(const Volume& v, const std::vector<std::array<std::size_t, 3>>& positions,
                            std::size_t p) {
    const std::size_t n = positions.size();
    if (n == 0) throw ContractError("patches_to_tensor: no positions");
    std::vector<T> data(n * p * p * p);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pos = positions[i];
        T* dst = data.data() + i * p * p * p;
        for (std::size_t z = 0; z < p; ++z)
            for (std::size_t y = 0; y < p; ++y) {
                const float* src = v.voxels.data() + v.index(pos[0], pos[1] + y, pos[2] + z);
                for (std::size_t x = 0; x < p; ++x)
                    dst[(z * p + y) * p + x] = static_cast<T>(src[x]);
            }
    }
    return Tensor<T>::from_data({n, 1, p, p, p}, std::move(data));
}

}  // namespace hysnet
